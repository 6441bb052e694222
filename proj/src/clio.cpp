#include "hive/clio.hpp"

#include "hive/rng.hpp"
#include "hive/synthgen.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace hive {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are little-endian");

namespace {

// ---------------------------------------------------------------------------
// Small file and text helpers.

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Write-to-temp-then-rename so readers never observe a partial file.
void atomic_write(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv_line(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> fields;
    std::size_t begin = 0;
    while (true) {
        std::size_t comma = line.find(',', begin);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(begin));
            break;
        }
        fields.push_back(line.substr(begin, comma - begin));
        begin = comma + 1;
    }
    return fields;
}

double parse_value(const std::string& text, const std::string& where) {
    const char* s = text.c_str();
    char* end = nullptr;
    double v = std::strtod(s, &end);
    if (end == s || *end != '\0')
        throw std::invalid_argument(where + ": bad numeric value '" + text + "'");
    return v;
}

std::string verdict_name(Verdict v) {
    return v == Verdict::anomalous ? "anomalous" : "nominal";
}

Verdict verdict_from_name(const std::string& s, const std::string& where) {
    if (s == "anomalous") return Verdict::anomalous;
    if (s == "nominal") return Verdict::nominal;
    throw std::invalid_argument(where + ": unknown verdict '" + s + "'");
}

// ---------------------------------------------------------------------------
// Civil-calendar conversion (proleptic Gregorian), so timestamp handling
// never depends on the process time zone.

std::int64_t civil_to_days(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const int yoe = static_cast<int>(y - era * 400);
    const int doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const int doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + doe - 719468;
}

void days_to_civil(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const int doe = static_cast<int>(z - era * 146097);
    const int yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const int mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y = static_cast<int>(yoe + era * 400) + (m <= 2);
}

} // namespace

std::string format_timestamp(std::int64_t seconds) {
    std::int64_t days = seconds / 86400;
    std::int64_t sod = seconds % 86400;
    if (sod < 0) {
        sod += 86400;
        days -= 1;
    }
    int y, m, d;
    days_to_civil(days, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", y, m, d,
                  static_cast<int>(sod / 3600), static_cast<int>(sod / 60 % 60),
                  static_cast<int>(sod % 60));
    return buf;
}

std::int64_t parse_timestamp(const std::string& text) {
    int y, mo, d, h, mi, s;
    char z = 0, tail = 0;
    int got = std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c%c", &y, &mo,
                          &d, &h, &mi, &s, &z, &tail);
    if (got != 7 || z != 'Z')
        throw std::invalid_argument("bad timestamp '" + text + "'");
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || s > 59 ||
        h < 0 || mi < 0 || s < 0)
        throw std::invalid_argument("bad timestamp '" + text + "'");
    std::int64_t value =
        civil_to_days(y, mo, d) * 86400 + h * 3600 + mi * 60 + s;
    // Round-tripping rejects non-dates like February 30 and padded forms.
    if (format_timestamp(value) != text)
        throw std::invalid_argument("bad timestamp '" + text + "'");
    return value;
}

// ---------------------------------------------------------------------------
// Trace files.

void write_trace_csv(const std::filesystem::path& path, const SensorTrace& trace) {
    if (trace.sensor_ids.empty())
        throw std::invalid_argument("trace has no sensors");
    std::ostringstream out;
    out << "timestamp";
    for (const auto& id : trace.sensor_ids) out << ',' << id;
    out << '\n';
    for (std::size_t t = 0; t < trace.samples(); ++t) {
        out << format_timestamp((trace.start + static_cast<Minute>(t)) * 60);
        for (std::size_t s = 0; s < trace.sensors(); ++s) {
            out << ',';
            double v = trace.values[s][t];
            if (!std::isnan(v)) out << fmt_double(v);
        }
        out << '\n';
    }
    atomic_write(path, out.str());
}

SensorTrace ingest(const std::filesystem::path& path, const std::string& source) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line))
        throw std::invalid_argument(path.string() + ": empty file");
    auto header = split_csv_line(line);
    if (header.size() < 2 || header[0] != "timestamp")
        throw std::invalid_argument(path.string() +
                                    ": header must be timestamp,<sensor_id>,...");
    SensorTrace trace;
    trace.source = source;
    trace.sensor_ids.assign(header.begin() + 1, header.end());
    for (const auto& id : trace.sensor_ids)
        if (id.empty())
            throw std::invalid_argument(path.string() + ": empty sensor id in header");
    trace.values.resize(trace.sensor_ids.size());

    const double nan = std::nan("");
    std::size_t line_no = 1;
    Minute prev = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_csv_line(std::move(line));
        std::string where = path.string() + ": line " + std::to_string(line_no);
        if (fields.size() != header.size())
            throw std::invalid_argument(where + ": expected " +
                                        std::to_string(header.size()) + " fields, got " +
                                        std::to_string(fields.size()));
        std::int64_t sec = parse_timestamp(fields[0]);
        if (sec % 60 != 0)
            throw std::invalid_argument(where + ": timestamp not minute-aligned");
        Minute minute = sec / 60;
        if (first) {
            trace.start = minute;
            first = false;
        } else {
            if (minute == prev)
                throw std::invalid_argument(where + ": duplicate timestamp " + fields[0]);
            if (minute < prev)
                throw std::invalid_argument(where + ": non-monotonic timestamp " +
                                            fields[0]);
            // A skipped minute stays in the grid as a missing sample.
            for (Minute gap = prev + 1; gap < minute; ++gap)
                for (auto& column : trace.values) column.push_back(nan);
        }
        prev = minute;
        for (std::size_t s = 0; s < trace.values.size(); ++s) {
            const std::string& cell = fields[s + 1];
            trace.values[s].push_back(cell.empty() ? nan
                                                   : parse_value(cell, where));
        }
    }
    if (first) throw std::invalid_argument(path.string() + ": no data rows");
    return trace;
}

SensorTrace downsample_to_minutes(const RawTrace& raw) {
    if (raw.period_seconds < 1 || raw.period_seconds > 59)
        throw std::invalid_argument("sampling period must be 1..59 seconds");
    if (raw.sensor_ids.empty() || raw.values.size() != raw.sensor_ids.size())
        throw std::invalid_argument("raw trace shape mismatch");
    const std::size_t n = raw.values.front().size();
    for (const auto& column : raw.values)
        if (column.size() != n)
            throw std::invalid_argument("raw trace shape mismatch");
    if (n == 0) throw std::invalid_argument("raw trace is empty");

    const Minute first_minute = raw.start_second / 60 -
                                (raw.start_second % 60 < 0 ? 1 : 0);
    const std::int64_t last_second =
        raw.start_second + static_cast<std::int64_t>(n - 1) * raw.period_seconds;
    const Minute last_minute = last_second / 60 - (last_second % 60 < 0 ? 1 : 0);
    const std::size_t minutes = static_cast<std::size_t>(last_minute - first_minute + 1);

    SensorTrace trace;
    trace.source = raw.source;
    trace.sensor_ids = raw.sensor_ids;
    trace.start = first_minute;
    trace.values.assign(raw.sensor_ids.size(), {});
    for (std::size_t s = 0; s < raw.values.size(); ++s) {
        std::vector<double> sums(minutes, 0.0);
        std::vector<std::size_t> counts(minutes, 0);
        for (std::size_t i = 0; i < n; ++i) {
            double v = raw.values[s][i];
            if (std::isnan(v)) continue;
            std::int64_t sec = raw.start_second +
                               static_cast<std::int64_t>(i) * raw.period_seconds;
            Minute m = sec / 60 - (sec % 60 < 0 ? 1 : 0);
            std::size_t slot = static_cast<std::size_t>(m - first_minute);
            sums[slot] += v;
            counts[slot] += 1;
        }
        trace.values[s].resize(minutes);
        for (std::size_t m = 0; m < minutes; ++m)
            trace.values[s][m] =
                counts[m] ? sums[m] / static_cast<double>(counts[m]) : std::nan("");
    }
    return trace;
}

// ---------------------------------------------------------------------------
// Label files.

void write_labels_csv(const std::filesystem::path& path, const LabelFile& labels) {
    std::ostringstream out;
    out << "start,end,kind,verified\n";
    for (const auto& event : labels.events) {
        if (event.kind != Label::swarm && event.kind != Label::other_anomaly)
            throw std::invalid_argument("label events must be swarm or other_anomaly");
        out << format_timestamp(event.start * 60) << ','
            << format_timestamp(event.end * 60) << ',' << to_string(event.kind)
            << ',' << (event.verified ? "true" : "false") << '\n';
    }
    for (const auto& day : labels.days) {
        out << format_timestamp(day.start * 60) << ','
            << format_timestamp((day.start + day.length) * 60) << ','
            << (day.anomalous ? "anomalous_day" : "normal_day") << ",true\n";
    }
    atomic_write(path, out.str());
}

LabelFile read_labels_csv(const std::filesystem::path& path,
                          const std::string& source) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) ||
        split_csv_line(line) != std::vector<std::string>{"start", "end", "kind", "verified"})
        throw std::invalid_argument(path.string() +
                                    ": header must be start,end,kind,verified");
    LabelFile labels;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_csv_line(std::move(line));
        std::string where = path.string() + ": line " + std::to_string(line_no);
        if (fields.size() != 4)
            throw std::invalid_argument(where + ": expected 4 fields");
        std::int64_t start_sec = parse_timestamp(fields[0]);
        std::int64_t end_sec = parse_timestamp(fields[1]);
        if (start_sec % 60 != 0 || end_sec % 60 != 0)
            throw std::invalid_argument(where + ": timestamps not minute-aligned");
        if (end_sec <= start_sec)
            throw std::invalid_argument(where + ": end before start");
        bool verified;
        if (fields[3] == "true")
            verified = true;
        else if (fields[3] == "false")
            verified = false;
        else
            throw std::invalid_argument(where + ": verified must be true or false");
        const std::string& kind = fields[2];
        if (kind == "swarm" || kind == "other_anomaly") {
            labels.events.push_back({kind == "swarm" ? Label::swarm
                                                     : Label::other_anomaly,
                                     start_sec / 60, end_sec / 60, verified});
        } else if (kind == "normal_day" || kind == "anomalous_day") {
            DayTag day;
            day.source = source;
            day.start = start_sec / 60;
            day.length = end_sec / 60 - start_sec / 60;
            day.anomalous = kind == "anomalous_day";
            labels.days.push_back(day);
        } else {
            throw std::invalid_argument(where + ": unknown kind '" + kind + "'");
        }
    }
    return labels;
}

// ---------------------------------------------------------------------------
// Run configuration.

namespace {

json params_to_json(const ParamAssignment& params) {
    json j = json::object();
    for (const auto& [name, value] : params) {
        if (std::holds_alternative<double>(value))
            j[name] = std::get<double>(value);
        else if (std::holds_alternative<std::int64_t>(value))
            j[name] = std::get<std::int64_t>(value);
        else
            j[name] = std::get<std::string>(value);
    }
    return j;
}

ParamAssignment params_from_json(const json& j) {
    if (!j.is_object())
        throw std::invalid_argument("config field 'params' must be an object");
    ParamAssignment params;
    for (const auto& [name, value] : j.items()) {
        if (value.is_number_integer())
            params.emplace_back(name, value.get<std::int64_t>());
        else if (value.is_number_float())
            params.emplace_back(name, value.get<double>());
        else if (value.is_string())
            params.emplace_back(name, value.get<std::string>());
        else
            throw std::invalid_argument("config parameter '" + name +
                                        "' must be a number or string");
    }
    return params;
}

void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed,
                         const std::string& where) {
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* key : allowed)
            if (item.key() == key) ok = true;
        if (!ok)
            throw std::invalid_argument("unknown " + where + " field: " + item.key());
    }
}

} // namespace

RunConfig run_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config is not valid JSON: ") +
                                    e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
    reject_unknown_keys(j,
                        {"traces", "sensors", "detector", "split", "window_length",
                         "train_stride", "detect_stride", "trials", "seed", "params"},
                        "config");
    RunConfig config;
    if (j.contains("traces")) {
        for (const auto& entry : j.at("traces")) {
            reject_unknown_keys(entry, {"source", "trace", "labels"}, "trace entry");
            TraceEntry t;
            t.source = entry.at("source").get<std::string>();
            t.trace_path = entry.at("trace").get<std::string>();
            t.label_path = entry.at("labels").get<std::string>();
            config.traces.push_back(std::move(t));
        }
    }
    if (j.contains("sensors"))
        config.sensors = j.at("sensors").get<std::vector<std::string>>();
    if (j.contains("detector"))
        config.detector = detector_kind_from_string(j.at("detector").get<std::string>());
    if (j.contains("split")) {
        const json& split = j.at("split");
        reject_unknown_keys(split, {"training_source", "validation_fraction"}, "split");
        if (split.contains("training_source"))
            config.training_source = split.at("training_source").get<std::string>();
        if (split.contains("validation_fraction"))
            config.validation_fraction = split.at("validation_fraction").get<double>();
    }
    if (j.contains("window_length"))
        config.window_length = j.at("window_length").get<std::size_t>();
    if (j.contains("train_stride"))
        config.train_stride = j.at("train_stride").get<std::size_t>();
    if (j.contains("detect_stride"))
        config.detect_stride = j.at("detect_stride").get<std::size_t>();
    if (j.contains("trials")) config.trials = j.at("trials").get<std::size_t>();
    if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("params")) config.params = params_from_json(j.at("params"));
    if (config.window_length == 0)
        throw std::invalid_argument("window_length must be positive");
    if (config.train_stride == 0 || config.detect_stride == 0)
        throw std::invalid_argument("strides must be positive");
    return config;
}

RunConfig read_run_config(const std::filesystem::path& path) {
    return run_config_from_json(read_file(path));
}

std::string run_config_json(const RunConfig& config) {
    json j;
    json traces = json::array();
    for (const auto& entry : config.traces)
        traces.push_back({{"source", entry.source},
                          {"trace", entry.trace_path},
                          {"labels", entry.label_path}});
    j["traces"] = std::move(traces);
    j["sensors"] = config.sensors;
    j["detector"] = to_string(config.detector);
    j["split"] = {{"training_source", config.training_source},
                  {"validation_fraction", config.validation_fraction}};
    j["window_length"] = config.window_length;
    j["train_stride"] = config.train_stride;
    j["detect_stride"] = config.detect_stride;
    j["trials"] = config.trials;
    j["seed"] = config.seed;
    j["params"] = params_to_json(config.params);
    return j.dump(2) + "\n";
}

std::string config_hash(const RunConfig& config) {
    std::string text = run_config_json(config);
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// Model checkpoints.

namespace {

constexpr char kMagic[8] = {'H', 'I', 'V', 'E', 'M', 'D', 'L', '\0'};
constexpr std::uint32_t kCheckpointVersion = 1;

std::uint32_t kind_tag(DetectorKind kind) { return static_cast<std::uint32_t>(kind); }

void append_u32(std::string& out, std::uint32_t v) {
    out.append(reinterpret_cast<const char*>(&v), 4);
}
void append_u64(std::string& out, std::uint64_t v) {
    out.append(reinterpret_cast<const char*>(&v), 8);
}
void append_doubles(std::string& out, const std::vector<double>& v) {
    if (!v.empty())
        out.append(reinterpret_cast<const char*>(v.data()),
                   v.size() * sizeof(double));
}

class BlobReader {
public:
    BlobReader(const std::string& data, std::size_t offset)
        : data_(data), offset_(offset) {}
    std::uint32_t u32() {
        need(4);
        std::uint32_t v;
        std::memcpy(&v, data_.data() + offset_, 4);
        offset_ += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v;
        std::memcpy(&v, data_.data() + offset_, 8);
        offset_ += 8;
        return v;
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string v = data_.substr(offset_, n);
        offset_ += n;
        return v;
    }
    std::vector<double> doubles(std::size_t n) {
        if (n == 0) return {};
        need(n * sizeof(double));
        std::vector<double> v(n);
        std::memcpy(v.data(), data_.data() + offset_, n * sizeof(double));
        offset_ += n * sizeof(double);
        return v;
    }
    std::size_t remaining() const { return data_.size() - offset_; }

private:
    void need(std::size_t n) const {
        if (offset_ + n > data_.size())
            throw std::runtime_error("truncated checkpoint");
    }
    const std::string& data_;
    std::size_t offset_;
};

} // namespace

void write_model(const std::filesystem::path& path, const SavedModel& model) {
    json header;
    header["kind"] = to_string(model.kind);
    header["sensors"] = model.sensors;
    header["window_length"] = model.window_length;
    header["fit_seed"] = model.fit_seed;
    header["params"] = params_to_json(model.params);
    header["scaler_size"] = model.scaler.mean.size();
    header["rows"] = model.rows;
    header["cols"] = model.cols;
    header["coefficients"] = model.coefficients.size();
    header["ae_parameters"] = model.ae_parameters.size();
    header["alpha_set"] = model.alpha_set;
    header["alpha_degenerate"] = model.alpha_degenerate;
    std::string header_text = header.dump();

    if (model.scaler.mean.size() != model.scaler.stddev.size())
        throw std::invalid_argument("scaler mean/stddev length mismatch");
    if (model.training.size() != model.rows * model.cols)
        throw std::invalid_argument("training matrix shape mismatch");

    std::string out;
    out.append(kMagic, sizeof kMagic);
    append_u32(out, kCheckpointVersion);
    append_u32(out, kind_tag(model.kind));
    append_u64(out, header_text.size());
    out += header_text;
    std::uint64_t blob_count = 2 * model.scaler.mean.size() + 2 +
                               model.training.size() + model.coefficients.size() +
                               model.ae_parameters.size();
    append_u64(out, blob_count);
    append_doubles(out, model.scaler.mean);
    append_doubles(out, model.scaler.stddev);
    out.append(reinterpret_cast<const char*>(&model.alpha), sizeof(double));
    out.append(reinterpret_cast<const char*>(&model.rho), sizeof(double));
    append_doubles(out, model.training);
    append_doubles(out, model.coefficients);
    append_doubles(out, model.ae_parameters);
    atomic_write(path, out);
}

SavedModel read_model(const std::filesystem::path& path) {
    std::string data = read_file(path);
    BlobReader reader(data, 0);
    std::string magic = reader.bytes(sizeof kMagic);
    if (std::memcmp(magic.data(), kMagic, sizeof kMagic) != 0)
        throw std::runtime_error(path.string() + " is not a model checkpoint");
    std::uint32_t version = reader.u32();
    if (version != kCheckpointVersion)
        throw std::runtime_error("unsupported checkpoint version " +
                                 std::to_string(version));
    std::uint32_t tag = reader.u32();
    if (tag > 5) throw std::runtime_error("unknown checkpoint kind tag");
    std::uint64_t header_len = reader.u64();
    json header;
    try {
        header = json::parse(reader.bytes(header_len));
    } catch (const json::parse_error&) {
        throw std::runtime_error("corrupt checkpoint header");
    }
    SavedModel model;
    model.kind = detector_kind_from_string(header.at("kind").get<std::string>());
    if (kind_tag(model.kind) != tag)
        throw std::runtime_error("checkpoint kind tag disagrees with its header");
    model.sensors = header.at("sensors").get<std::vector<std::string>>();
    model.window_length = header.at("window_length").get<std::size_t>();
    model.fit_seed = header.at("fit_seed").get<std::uint64_t>();
    model.params = params_from_json(header.at("params"));
    model.rows = header.at("rows").get<std::size_t>();
    model.cols = header.at("cols").get<std::size_t>();
    model.alpha_set = header.at("alpha_set").get<bool>();
    model.alpha_degenerate = header.at("alpha_degenerate").get<bool>();
    std::size_t scaler_size = header.at("scaler_size").get<std::size_t>();
    std::size_t coef_count = header.at("coefficients").get<std::size_t>();
    std::size_t ae_count = header.at("ae_parameters").get<std::size_t>();

    std::uint64_t blob_count = reader.u64();
    if (blob_count != 2 * scaler_size + 2 + model.rows * model.cols + coef_count +
                          ae_count)
        throw std::runtime_error("checkpoint blob count disagrees with its header");
    model.scaler.mean = reader.doubles(scaler_size);
    model.scaler.stddev = reader.doubles(scaler_size);
    model.alpha = reader.doubles(1)[0];
    model.rho = reader.doubles(1)[0];
    model.training = reader.doubles(model.rows * model.cols);
    model.coefficients = reader.doubles(coef_count);
    model.ae_parameters = reader.doubles(ae_count);
    if (reader.remaining() != 0)
        throw std::runtime_error("trailing bytes after checkpoint blob");
    return model;
}

// ---------------------------------------------------------------------------
// Parameter translation.

namespace {

const ParamValue* find_param(const ParamAssignment& params, const char* name) {
    for (const auto& [key, value] : params)
        if (key == name) return &value;
    return nullptr;
}

double as_double(const ParamValue& value, const std::string& name) {
    if (const double* d = std::get_if<double>(&value)) return *d;
    if (const std::int64_t* i = std::get_if<std::int64_t>(&value))
        return static_cast<double>(*i);
    throw std::invalid_argument("parameter '" + name + "' must be numeric");
}

std::int64_t as_int(const ParamValue& value, const std::string& name) {
    if (const std::int64_t* i = std::get_if<std::int64_t>(&value)) return *i;
    throw std::invalid_argument("parameter '" + name + "' must be an integer");
}

std::string as_string(const ParamValue& value, const std::string& name) {
    if (const std::string* s = std::get_if<std::string>(&value)) return *s;
    throw std::invalid_argument("parameter '" + name + "' must be a string");
}

bool as_bool(const ParamValue& value, const std::string& name) {
    std::string s = as_string(value, name);
    if (s == "true") return true;
    if (s == "false") return false;
    throw std::invalid_argument("parameter '" + name + "' must be true or false");
}

std::size_t as_size(const ParamValue& value, const std::string& name) {
    std::int64_t i = as_int(value, name);
    if (i < 0)
        throw std::invalid_argument("parameter '" + name + "' must be non-negative");
    return static_cast<std::size_t>(i);
}

[[noreturn]] void unknown_param(const char* kind, const std::string& name) {
    throw std::invalid_argument(std::string("unknown ") + kind + " parameter: " +
                                name);
}

} // namespace

RbaConfig rba_params(const ParamAssignment& params) {
    RbaConfig config;
    for (const auto& [name, value] : params) {
        if (name == "threshold")
            config.threshold = as_double(value, name);
        else if (name == "min_duration")
            config.min_duration = static_cast<int>(as_int(value, name));
        else if (name == "max_duration")
            config.max_duration = static_cast<int>(as_int(value, name));
        else
            unknown_param("rba", name);
    }
    return config;
}

LofParams lof_params(const ParamAssignment& params) {
    LofParams config;
    for (const auto& [name, value] : params) {
        if (name == "n_neighbors")
            config.k = as_size(value, name);
        else if (name == "algorithm")
            config.index = neighbor_index_from_string(as_string(value, name));
        else if (name == "leaf_size")
            config.leaf_size = as_size(value, name);
        else if (name == "contamination")
            config.contamination = as_double(value, name);
        else if (name == "metric")
            config.metric = metric_from_string(as_string(value, name));
        else
            unknown_param("lof", name);
    }
    return config;
}

IforestParams iforest_params(const ParamAssignment& params, std::uint64_t seed) {
    IforestParams config;
    config.seed = seed;
    for (const auto& [name, value] : params) {
        if (name == "n_estimators")
            config.n_estimators = as_size(value, name);
        else if (name == "max_samples") {
            if (std::holds_alternative<std::string>(value)) {
                if (std::get<std::string>(value) != "auto")
                    throw std::invalid_argument(
                        "parameter 'max_samples' must be \"auto\" or an integer");
                config.max_samples = 0;
            } else {
                config.max_samples = as_size(value, name);
            }
        } else if (name == "contamination")
            config.contamination = as_double(value, name);
        else if (name == "max_features")
            config.max_features = as_double(value, name);
        else if (name == "bootstrap")
            config.bootstrap = as_bool(value, name);
        else
            unknown_param("iforest", name);
    }
    return config;
}

McdParams mcd_params(const ParamAssignment& params, std::uint64_t seed) {
    McdParams config;
    config.seed = seed;
    for (const auto& [name, value] : params) {
        if (name == "assume_centered")
            config.assume_centered = as_bool(value, name);
        else if (name == "support_fraction")
            config.support_fraction = as_double(value, name);
        else if (name == "contamination")
            config.contamination = as_double(value, name);
        else
            unknown_param("envelope", name);
    }
    return config;
}

OcsvmParams ocsvm_params(const ParamAssignment& params) {
    OcsvmParams config;
    for (const auto& [name, value] : params) {
        if (name == "kernel")
            config.kernel.kind = kernel_kind_from_string(as_string(value, name));
        else if (name == "gamma")
            config.kernel.gamma = as_double(value, name);
        else if (name == "degree")
            config.kernel.degree = static_cast<int>(as_int(value, name));
        else if (name == "coef0")
            config.kernel.coef0 = as_double(value, name);
        else if (name == "nu")
            config.nu = as_double(value, name);
        else if (name == "shrinking")
            config.shrinking = as_bool(value, name);
        else if (name == "tolerance")
            config.tolerance = as_double(value, name);
        else
            unknown_param("ocsvm", name);
    }
    return config;
}

AeConfig ae_config(const ParamAssignment& params, std::size_t sensors,
                   std::size_t window_length, std::uint64_t seed) {
    AeConfig config;
    config.sensors = sensors;
    config.window_length = window_length;
    config.seed = seed;
    for (const auto& [name, value] : params) {
        if (name == "hidden_size")
            config.hidden_size = as_size(value, name);
        else if (name == "layers")
            config.layers = as_size(value, name);
        else if (name == "learning_rate")
            config.learning_rate = as_double(value, name);
        else if (name == "patience")
            config.patience = static_cast<int>(as_int(value, name));
        else if (name == "max_epochs")
            config.max_epochs = static_cast<int>(as_int(value, name));
        else if (name == "batch_size")
            config.batch_size = as_size(value, name);
        else
            unknown_param("autoencoder", name);
    }
    return config;
}

// ---------------------------------------------------------------------------
// FittedDetector.

std::vector<std::vector<double>>
FittedDetector::scale_flatten(const std::vector<Window>& windows) const {
    std::vector<std::vector<double>> rows;
    rows.reserve(windows.size());
    for (const auto& window : windows)
        rows.push_back(flatten(apply_scaler(scaler_, window)));
    return rows;
}

FittedDetector FittedDetector::fit(DetectorKind kind, const ParamAssignment& params,
                                   const std::vector<Window>& training,
                                   const std::vector<Window>& validation,
                                   const Scaler& scaler, std::uint64_t seed) {
    if (kind == DetectorKind::rba)
        throw std::invalid_argument(
            "the rule-based detector is trace-level; see rba_window_verdicts");
    if (training.empty()) throw std::invalid_argument("no training windows");

    FittedDetector d;
    d.kind_ = kind;
    d.params_ = params;
    d.scaler_ = scaler;
    d.fit_seed_ = seed;
    d.window_length_ = training.front().length;
    d.cols_ = training.front().length * training.front().sensors;

    auto mat = d.scale_flatten(training);
    switch (kind) {
    case DetectorKind::lof:
        d.lof_.emplace(LofModel::fit(mat, lof_params(params)));
        break;
    case DetectorKind::iforest:
        d.forest_.emplace(ForestModel::fit(mat, iforest_params(params, seed)));
        break;
    case DetectorKind::envelope:
        d.mcd_.emplace(McdModel::fit(mat, mcd_params(params, seed)));
        break;
    case DetectorKind::ocsvm:
        d.ocsvm_.emplace(OcsvmModel::fit(mat, ocsvm_params(params)));
        break;
    case DetectorKind::autoencoder: {
        auto val = d.scale_flatten(validation);
        d.ae_.emplace(AeModel::train(
            mat, val, ae_config(params, training.front().sensors,
                                training.front().length, seed)));
        break;
    }
    default:
        throw std::logic_error("unhandled detector kind");
    }
    if (kind != DetectorKind::ocsvm && kind != DetectorKind::autoencoder) {
        // Reference-set kinds refit from this matrix when a checkpoint loads.
        d.rows_ = mat.size();
        d.training_.reserve(mat.size() * d.cols_);
        for (const auto& row : mat)
            d.training_.insert(d.training_.end(), row.begin(), row.end());
    }
    return d;
}

std::vector<double> FittedDetector::scores(const std::vector<Window>& windows) const {
    auto mat = scale_flatten(windows);
    switch (kind_) {
    case DetectorKind::lof:
        return lof_->score_batch(mat);
    case DetectorKind::iforest:
        return forest_->score_batch(mat);
    case DetectorKind::envelope:
        return mcd_->distance_batch(mat);
    case DetectorKind::ocsvm: {
        auto values = ocsvm_->decision_batch(mat);
        for (double& v : values) v = -v; // higher = more anomalous
        return values;
    }
    case DetectorKind::autoencoder:
        return ae_->loss_batch(mat);
    default:
        throw std::logic_error("unhandled detector kind");
    }
}

std::vector<Verdict> FittedDetector::classify(const std::vector<Window>& windows) const {
    auto mat = scale_flatten(windows);
    std::vector<Verdict> verdicts;
    verdicts.reserve(mat.size());
    for (const auto& row : mat) {
        switch (kind_) {
        case DetectorKind::lof:
            verdicts.push_back(lof_->classify(row));
            break;
        case DetectorKind::iforest:
            verdicts.push_back(forest_->classify(row));
            break;
        case DetectorKind::envelope:
            verdicts.push_back(mcd_->classify(row));
            break;
        case DetectorKind::ocsvm:
            verdicts.push_back(ocsvm_->classify(row));
            break;
        case DetectorKind::autoencoder:
            verdicts.push_back(ae_->classify(row));
            break;
        default:
            throw std::logic_error("unhandled detector kind");
        }
    }
    return verdicts;
}

AeModel& FittedDetector::autoencoder() {
    if (!ae_) throw std::logic_error("not an autoencoder model");
    return *ae_;
}
const AeModel& FittedDetector::autoencoder() const {
    if (!ae_) throw std::logic_error("not an autoencoder model");
    return *ae_;
}

SavedModel FittedDetector::save() const {
    SavedModel model;
    model.kind = kind_;
    model.window_length = window_length_;
    model.fit_seed = fit_seed_;
    model.params = params_;
    model.scaler = scaler_;
    model.rows = rows_;
    model.cols = cols_;
    model.training = training_;
    if (kind_ == DetectorKind::ocsvm) {
        const auto& svs = ocsvm_->support_vectors();
        model.rows = svs.size();
        model.training.clear();
        model.training.reserve(svs.size() * cols_);
        for (const auto& sv : svs)
            model.training.insert(model.training.end(), sv.begin(), sv.end());
        model.coefficients = ocsvm_->dual_coefficients();
        model.rho = ocsvm_->rho();
    }
    if (kind_ == DetectorKind::autoencoder) {
        model.ae_parameters = ae_->parameters();
        model.alpha_set = ae_->calibrated();
        model.alpha = ae_->calibrated() ? ae_->alpha() : 0.0;
        model.alpha_degenerate = ae_->degenerate_alpha();
    }
    return model;
}

FittedDetector FittedDetector::load(const SavedModel& model) {
    if (model.kind == DetectorKind::rba)
        throw std::invalid_argument(
            "the rule-based detector is trace-level; see rba_window_verdicts");
    FittedDetector d;
    d.kind_ = model.kind;
    d.params_ = model.params;
    d.scaler_ = model.scaler;
    d.fit_seed_ = model.fit_seed;
    d.window_length_ = model.window_length;
    d.rows_ = model.rows;
    d.cols_ = model.cols;
    d.training_ = model.training;
    if (model.cols == 0) throw std::runtime_error("checkpoint has no window shape");

    std::vector<std::vector<double>> mat(model.rows);
    for (std::size_t r = 0; r < model.rows; ++r)
        mat[r].assign(model.training.begin() + r * model.cols,
                      model.training.begin() + (r + 1) * model.cols);
    switch (model.kind) {
    case DetectorKind::lof:
        d.lof_.emplace(LofModel::fit(std::move(mat), lof_params(model.params)));
        break;
    case DetectorKind::iforest:
        d.forest_.emplace(
            ForestModel::fit(mat, iforest_params(model.params, model.fit_seed)));
        break;
    case DetectorKind::envelope:
        d.mcd_.emplace(McdModel::fit(mat, mcd_params(model.params, model.fit_seed)));
        break;
    case DetectorKind::ocsvm:
        d.ocsvm_.emplace(OcsvmModel::restore(std::move(mat), model.coefficients,
                                             model.rho, ocsvm_params(model.params)));
        break;
    case DetectorKind::autoencoder: {
        std::size_t sensors = model.cols / model.window_length;
        if (sensors * model.window_length != model.cols)
            throw std::runtime_error("checkpoint window shape mismatch");
        d.ae_.emplace(AeModel::restore(
            ae_config(model.params, sensors, model.window_length, model.fit_seed),
            model.ae_parameters));
        if (model.alpha_set)
            d.ae_->set_alpha(model.alpha, model.alpha_degenerate);
        break;
    }
    default:
        throw std::logic_error("unhandled detector kind");
    }
    return d;
}

// ---------------------------------------------------------------------------
// Rule-based window verdicts.

std::vector<Verdict> rba_window_verdicts(const SensorTrace& trace,
                                         const std::vector<std::string>& sensors,
                                         const RbaConfig& config,
                                         const std::vector<Window>& windows,
                                         std::vector<double>* scores) {
    // Detected runs as absolute half-open minute intervals.
    std::vector<std::pair<Minute, Minute>> intervals;
    for (const auto& id : sensors) {
        std::size_t idx = trace.sensor_index(id);
        for (const auto& run : rba_detect(trace.values[idx], config))
            intervals.emplace_back(trace.start + static_cast<Minute>(run.first),
                                   trace.start + static_cast<Minute>(run.last) + 1);
    }
    std::vector<Verdict> verdicts(windows.size(), Verdict::nominal);
    if (scores) scores->assign(windows.size(), 0.0);
    for (std::size_t w = 0; w < windows.size(); ++w) {
        Minute begin = windows[w].start;
        Minute end = begin + static_cast<Minute>(windows[w].length);
        Minute overlap = 0;
        for (const auto& [a, b] : intervals)
            overlap += std::max<Minute>(0, std::min(b, end) - std::max(a, begin));
        if (overlap >= 1) verdicts[w] = Verdict::anomalous;
        if (scores) (*scores)[w] = static_cast<double>(overlap);
    }
    return verdicts;
}

// ---------------------------------------------------------------------------
// Command plumbing.

namespace {

struct LoadedRun {
    std::map<std::string, SensorTrace> traces;
    std::map<std::string, std::vector<LabeledEvent>> events;
    SplitPlan plan;
};

LoadedRun load_run(const RunConfig& config) {
    if (config.traces.empty())
        throw std::invalid_argument("config names no trace files");
    LoadedRun run;
    std::vector<DayTag> all_days;
    for (const auto& entry : config.traces) {
        if (run.traces.count(entry.source))
            throw std::invalid_argument("duplicate source '" + entry.source + "'");
        run.traces.emplace(entry.source, ingest(entry.trace_path, entry.source));
        LabelFile labels = read_labels_csv(entry.label_path, entry.source);
        run.events.emplace(entry.source, std::move(labels.events));
        all_days.insert(all_days.end(), labels.days.begin(), labels.days.end());
    }
    SplitConfig split;
    split.training_source = config.training_source.empty()
                                ? config.traces.front().source
                                : config.training_source;
    split.validation_fraction = config.validation_fraction;
    run.plan = build_split(all_days, split);
    return run;
}

void require_sensors(const RunConfig& config) {
    if (config.sensors.empty())
        throw std::invalid_argument("config names no sensors");
}

// Evaluation datasets in report order: the training source's holdout days
// first, then each test source.
std::vector<std::pair<std::string, const std::vector<DayTag>*>>
eval_datasets(const SplitPlan& plan) {
    std::vector<std::pair<std::string, const std::vector<DayTag>*>> datasets;
    datasets.emplace_back(plan.training_source, &plan.holdout);
    for (const auto& [source, days] : plan.tests)
        datasets.emplace_back(source, &days);
    return datasets;
}

json day_to_json(const DayTag& day) {
    return {{"source", day.source},
            {"start", format_timestamp(day.start * 60)},
            {"length", day.length},
            {"anomalous", day.anomalous}};
}

void write_manifest(const std::filesystem::path& out_dir, const std::string& command,
                    const RunConfig* config, const json& inputs,
                    const std::vector<std::string>& outputs) {
    json manifest;
    manifest["tool"] = "hivewatch";
    manifest["version"] = "1.0.0";
    manifest["command"] = command;
    if (config) {
        manifest["config"] = json::parse(run_config_json(*config));
        manifest["config_hash"] = config_hash(*config);
        manifest["seed"] = config->seed;
    }
    manifest["inputs"] = inputs;
    manifest["outputs"] = outputs;
    atomic_write(out_dir / "manifest.json", manifest.dump(2) + "\n");
}

json trace_inputs(const RunConfig& config) {
    json inputs = json::object();
    json traces = json::array();
    for (const auto& entry : config.traces)
        traces.push_back({{"source", entry.source},
                          {"trace", entry.trace_path},
                          {"labels", entry.label_path}});
    inputs["traces"] = std::move(traces);
    return inputs;
}

std::vector<Label> window_labels(const std::vector<Window>& windows) {
    std::vector<Label> labels;
    labels.reserve(windows.size());
    for (const auto& window : windows) labels.push_back(window.label);
    return labels;
}

// Slice one day of one sensor and scan it for swarm-shaped runs.
std::size_t vet_day_findings(const SensorTrace& trace, const DayTag& day,
                             const std::vector<std::string>& sensors) {
    if (day.start < trace.start ||
        day.start + day.length > trace.end())
        throw std::invalid_argument("day tag at " + format_timestamp(day.start * 60) +
                                    " lies outside the " + trace.source + " trace");
    std::size_t findings = 0;
    for (const auto& id : sensors) {
        std::size_t idx = trace.sensor_index(id);
        std::size_t offset = static_cast<std::size_t>(day.start - trace.start);
        std::span<const double> span(trace.values[idx].data() + offset,
                                     static_cast<std::size_t>(day.length));
        findings += rba_detect(span, RbaConfig{}).size();
    }
    return findings;
}

} // namespace

std::string run_synth(const RunConfig& config, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    auto hives = make_benchmark(default_benchmark_scenario(config.seed));
    std::vector<std::string> outputs;
    std::ostringstream summary;
    for (const auto& hive : hives) {
        std::string trace_name = hive.trace.source + ".csv";
        std::string label_name = hive.trace.source + "-labels.csv";
        write_trace_csv(out_dir / trace_name, hive.trace);
        write_labels_csv(out_dir / label_name, LabelFile{hive.events, hive.days});
        outputs.push_back(trace_name);
        outputs.push_back(label_name);
        summary << hive.trace.source << ": " << hive.trace.samples()
                << " minutes, " << hive.trace.sensors() << " sensors, "
                << hive.events.size() << " labeled events over "
                << hive.days.size() << " days\n";
    }
    write_manifest(out_dir, "synth", &config, json::object(), outputs);
    return summary.str();
}

std::string run_split(const RunConfig& config, const std::filesystem::path& out_dir) {
    require_sensors(config);
    std::filesystem::create_directories(out_dir);
    LoadedRun run = load_run(config);
    const SplitPlan& plan = run.plan;

    json j;
    j["training_source"] = plan.training_source;
    for (const char* role : {"training", "validation", "holdout"}) {
        const std::vector<DayTag>& days = role == std::string("training")
                                              ? plan.training
                                              : role == std::string("validation")
                                                    ? plan.validation
                                                    : plan.holdout;
        json list = json::array();
        for (const auto& day : days) list.push_back(day_to_json(day));
        j[role] = std::move(list);
    }
    json tests = json::object();
    for (const auto& [source, days] : plan.tests) {
        json list = json::array();
        for (const auto& day : days) list.push_back(day_to_json(day));
        tests[source] = std::move(list);
    }
    j["tests"] = std::move(tests);

    const SensorTrace& trace = run.traces.at(plan.training_source);
    const auto& events = run.events.at(plan.training_source);
    auto training = materialize(trace, plan.training, events, config.sensors,
                                config.window_length, config.train_stride);
    json counts;
    counts["training_windows"] = training.windows.size();
    counts["training_excluded_missing"] = training.excluded_missing;
    auto holdout = materialize(trace, plan.holdout, events, config.sensors,
                               config.window_length, config.detect_stride);
    std::size_t holdout_swarm = 0;
    for (const auto& w : holdout.windows) holdout_swarm += w.label == Label::swarm;
    counts["holdout_windows"] = holdout.windows.size();
    counts["holdout_swarm_windows"] = holdout_swarm;
    j["window_counts"] = std::move(counts);

    atomic_write(out_dir / "split.json", j.dump(2) + "\n");
    write_manifest(out_dir, "split", &config, trace_inputs(config), {"split.json"});

    std::ostringstream summary;
    summary << plan.training_source << ": " << plan.training.size()
            << " training days, " << plan.validation.size() << " validation, "
            << plan.holdout.size() << " holdout";
    for (const auto& [source, days] : plan.tests)
        summary << "; " << source << ": " << days.size() << " test days";
    summary << "\n";
    return summary.str();
}

std::string run_train(const RunConfig& config, const std::filesystem::path& out_dir) {
    require_sensors(config);
    std::filesystem::create_directories(out_dir);
    LoadedRun run = load_run(config);
    const SplitPlan& plan = run.plan;
    const SensorTrace& trace = run.traces.at(plan.training_source);
    const auto& events = run.events.at(plan.training_source);

    // Vet every training and validation day for swarm-shaped runs before
    // anything trains on it.
    std::size_t findings = 0;
    for (const auto& day : plan.training)
        findings += vet_day_findings(trace, day, config.sensors);
    for (const auto& day : plan.validation)
        findings += vet_day_findings(trace, day, config.sensors);
    if (findings > 0)
        throw std::runtime_error("training data failed the swarm-run vet (" +
                                 std::to_string(findings) + " findings)");

    std::uint64_t fit_seed = derive_seed(config.seed, "fit");
    SavedModel model;
    std::ostringstream summary;
    if (config.detector == DetectorKind::rba) {
        (void)rba_params(config.params); // validate names now, not at detect time
        model.kind = DetectorKind::rba;
        model.sensors = config.sensors;
        model.window_length = config.window_length;
        model.fit_seed = fit_seed;
        model.params = config.params;
        summary << "rule-based detector configured over "
                << config.sensors.size() << " sensor(s); vet clean\n";
    } else {
        auto training = materialize(trace, plan.training, events, config.sensors,
                                    config.window_length, config.train_stride);
        auto validation = materialize(trace, plan.validation, events, config.sensors,
                                      config.window_length, config.train_stride);
        if (training.windows.empty())
            throw std::runtime_error("no training windows after exclusions");
        Scaler scaler = fit_scaler(training.windows);
        FittedDetector detector =
            FittedDetector::fit(config.detector, config.params, training.windows,
                                validation.windows, scaler, fit_seed);
        model = detector.save();
        model.sensors = config.sensors;
        summary << "trained " << to_string(config.detector) << " on "
                << training.windows.size() << " windows ("
                << plan.training.size() << " days), validated on "
                << validation.windows.size() << " windows";
        if (config.detector == DetectorKind::autoencoder) {
            const AeModel& ae = detector.autoencoder();
            summary << "; " << ae.history().size() << " epochs, best "
                    << ae.best_epoch() + 1 << " (validation loss "
                    << fmt_double(ae.history()[ae.best_epoch()].validation_loss)
                    << ")";
        }
        summary << "\n";
    }
    write_model(out_dir / "model.bin", model);
    write_manifest(out_dir, "train", &config, trace_inputs(config), {"model.bin"});
    return summary.str();
}

std::string run_tune(const RunConfig& config, const std::filesystem::path& model_path,
                     const std::filesystem::path& out_dir) {
    require_sensors(config);
    std::filesystem::create_directories(out_dir);
    LoadedRun run = load_run(config);
    const SplitPlan& plan = run.plan;
    const SensorTrace& trace = run.traces.at(plan.training_source);
    const auto& events = run.events.at(plan.training_source);

    auto holdout = materialize(trace, plan.holdout, events, config.sensors,
                               config.window_length, config.detect_stride);
    if (holdout.windows.empty())
        throw std::runtime_error("no holdout windows to tune against");
    std::vector<Label> labels = window_labels(holdout.windows);

    json inputs = trace_inputs(config);
    std::ostringstream summary;

    if (config.detector == DetectorKind::autoencoder) {
        // Threshold calibration on the labeled holdout; the architecture is
        // whatever the trained checkpoint says.
        if (model_path.empty())
            throw std::invalid_argument(
                "tuning the autoencoder threshold needs a trained model (--model)");
        SavedModel saved = read_model(model_path);
        if (saved.kind != DetectorKind::autoencoder)
            throw std::invalid_argument("model at " + model_path.string() +
                                        " is not an autoencoder checkpoint");
        FittedDetector detector = FittedDetector::load(saved);
        std::vector<double> losses = detector.scores(holdout.windows);
        std::vector<bool> positives;
        positives.reserve(labels.size());
        for (Label label : labels) positives.push_back(label == Label::swarm);
        AlphaChoice choice = AeModel::choose_alpha(losses, positives);
        detector.autoencoder().set_alpha(choice.alpha, choice.degenerate);

        SavedModel tuned = detector.save();
        tuned.sensors = saved.sensors;
        write_model(out_dir / "model.bin", tuned);
        json result;
        result["alpha"] = choice.alpha;
        result["f1"] = choice.f1;
        result["degenerate"] = choice.degenerate;
        atomic_write(out_dir / "tune.json", result.dump(2) + "\n");
        inputs["model"] = model_path.string();
        write_manifest(out_dir, "tune", &config, inputs, {"model.bin", "tune.json"});
        summary << "alpha = " << fmt_double(choice.alpha) << " (holdout f1 "
                << fmt_double(choice.f1) << (choice.degenerate ? ", degenerate" : "")
                << ")\n";
        return summary.str();
    }

    // Random search over the detector's space, judged by holdout swarm F1.
    auto training = materialize(trace, plan.training, events, config.sensors,
                                config.window_length, config.train_stride);
    auto validation = materialize(trace, plan.validation, events, config.sensors,
                                  config.window_length, config.train_stride);
    Scaler scaler;
    if (config.detector != DetectorKind::rba) {
        if (training.windows.empty())
            throw std::runtime_error("no training windows after exclusions");
        scaler = fit_scaler(training.windows);
    }
    auto trial = [&](std::size_t, const ParamAssignment& params,
                     std::uint64_t fit_seed) {
        std::vector<Verdict> verdicts;
        if (config.detector == DetectorKind::rba) {
            verdicts = rba_window_verdicts(trace, config.sensors, rba_params(params),
                                           holdout.windows);
        } else {
            FittedDetector detector =
                FittedDetector::fit(config.detector, params, training.windows,
                                    validation.windows, scaler, fit_seed);
            verdicts = detector.classify(holdout.windows);
        }
        return confusion(verdicts, labels);
    };
    SearchSpace space = default_search_space(config.detector);
    SearchResult result = random_search(space, config.trials,
                                        derive_seed(config.seed, "tune"), trial);
    const TrialResult& winner = result.winner();
    if (winner.failed)
        throw std::runtime_error("every tuning trial failed; last error: " +
                                 winner.error);

    SavedModel model;
    if (config.detector == DetectorKind::rba) {
        model.kind = DetectorKind::rba;
        model.sensors = config.sensors;
        model.window_length = config.window_length;
        model.fit_seed = winner.seed;
        model.params = winner.params;
    } else {
        FittedDetector best =
            FittedDetector::fit(config.detector, winner.params, training.windows,
                                validation.windows, scaler, winner.seed);
        model = best.save();
        model.sensors = config.sensors;
    }
    write_model(out_dir / "model.bin", model);
    atomic_write(out_dir / "trials.txt", render_trial_log(result));
    json result_json;
    result_json["best_trial"] = result.best;
    result_json["params"] = params_to_json(winner.params);
    result_json["tp"] = winner.counts.tp;
    result_json["fp"] = winner.counts.fp;
    result_json["tn"] = winner.counts.tn;
    result_json["fn"] = winner.counts.fn;
    result_json["f1"] = winner.scores.has_f1 ? json(winner.scores.f1) : json();
    atomic_write(out_dir / "tune.json", result_json.dump(2) + "\n");
    write_manifest(out_dir, "tune", &config, inputs,
                   {"model.bin", "trials.txt", "tune.json"});

    summary << "best trial " << result.best << " of " << config.trials;
    if (!winner.params.empty()) {
        summary << ":";
        for (const auto& [name, value] : winner.params)
            summary << ' ' << name << '=' << to_string(value);
    }
    if (winner.scores.has_f1)
        summary << "; holdout f1 " << fmt_double(winner.scores.f1);
    else
        summary << "; holdout f1 NA";
    summary << "\n";
    return summary.str();
}

std::string run_detect(const RunConfig& config, const std::filesystem::path& model_path,
                       const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    SavedModel model = read_model(model_path);
    if (model.kind != config.detector)
        throw std::invalid_argument(
            "config detector " + to_string(config.detector) +
            " does not match the checkpoint's " + to_string(model.kind));
    if (!config.sensors.empty() && config.sensors != model.sensors) {
        std::string theirs, ours;
        for (const auto& id : model.sensors) theirs += (theirs.empty() ? "" : " ") + id;
        for (const auto& id : config.sensors) ours += (ours.empty() ? "" : " ") + id;
        throw std::invalid_argument("the model was fit on sensors [" + theirs +
                                    "] but the config names [" + ours + "]");
    }
    if (model.sensors.empty())
        throw std::runtime_error("checkpoint names no sensors");

    LoadedRun run = load_run(config);
    std::optional<FittedDetector> detector;
    if (model.kind != DetectorKind::rba) detector.emplace(FittedDetector::load(model));

    std::ostringstream out;
    out << "source,start,score,verdict\n";
    std::ostringstream summary;
    json dataset_info = json::array();
    for (const auto& [source, days] : eval_datasets(run.plan)) {
        const SensorTrace& trace = run.traces.at(source);
        auto windows = materialize(trace, *days, run.events.at(source),
                                   model.sensors, model.window_length,
                                   config.detect_stride);
        std::vector<double> scores;
        std::vector<Verdict> verdicts;
        if (model.kind == DetectorKind::rba) {
            verdicts = rba_window_verdicts(trace, model.sensors,
                                           rba_params(model.params),
                                           windows.windows, &scores);
        } else {
            scores = detector->scores(windows.windows);
            verdicts = detector->classify(windows.windows);
        }
        std::size_t flagged = 0;
        for (std::size_t w = 0; w < windows.windows.size(); ++w) {
            out << source << ','
                << format_timestamp(windows.windows[w].start * 60) << ','
                << fmt_double(scores[w]) << ',' << verdict_name(verdicts[w]) << '\n';
            flagged += verdicts[w] == Verdict::anomalous;
        }
        summary << source << ": " << windows.windows.size() << " windows, "
                << flagged << " flagged (" << windows.excluded_missing
                << " dropped for gaps)\n";
        dataset_info.push_back({{"source", source},
                                {"windows", windows.windows.size()},
                                {"flagged", flagged},
                                {"excluded_missing", windows.excluded_missing}});
    }
    atomic_write(out_dir / "verdicts.csv", out.str());
    json inputs = trace_inputs(config);
    inputs["model"] = model_path.string();
    inputs["datasets"] = std::move(dataset_info);
    write_manifest(out_dir, "detect", &config, inputs, {"verdicts.csv"});
    return summary.str();
}

namespace {

void write_eval_outputs(const std::filesystem::path& out_dir,
                        const std::vector<DatasetReport>& rows,
                        const std::string& detector, json& eval_json) {
    EvalReport weighted = aggregate(rows, AggregationMode::weighted);
    EvalReport pooled = aggregate(rows, AggregationMode::pooled);
    atomic_write(out_dir / "report_weighted.txt", render_report(weighted, detector));
    atomic_write(out_dir / "report_pooled.txt", render_report(pooled, detector));
    atomic_write(out_dir / "report_long.csv", long_format(weighted, detector));

    eval_json["detector"] = detector;
    json row_list = json::array();
    for (const auto& row : rows)
        row_list.push_back({{"dataset", row.dataset},
                            {"tp", row.counts.tp},
                            {"fp", row.counts.fp},
                            {"tn", row.counts.tn},
                            {"fn", row.counts.fn},
                            {"excluded", row.excluded}});
    eval_json["rows"] = std::move(row_list);
    atomic_write(out_dir / "eval.json", eval_json.dump(2) + "\n");
}

} // namespace

std::string run_eval(const RunConfig& config, const std::filesystem::path& verdicts_path,
                     const std::filesystem::path& out_dir) {
    require_sensors(config);
    std::filesystem::create_directories(out_dir);
    LoadedRun run = load_run(config);

    // Parse the verdict file into per-source maps keyed by window start.
    std::ifstream in(verdicts_path);
    if (!in) throw std::runtime_error("cannot open " + verdicts_path.string());
    std::string line;
    if (!std::getline(in, line) ||
        split_csv_line(line) !=
            std::vector<std::string>{"source", "start", "score", "verdict"})
        throw std::invalid_argument(verdicts_path.string() +
                                    ": header must be source,start,score,verdict");
    std::map<std::string, std::map<Minute, Verdict>> by_source;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_csv_line(std::move(line));
        std::string where = verdicts_path.string() + ": line " + std::to_string(line_no);
        if (fields.size() != 4)
            throw std::invalid_argument(where + ": expected 4 fields");
        std::int64_t sec = parse_timestamp(fields[1]);
        if (sec % 60 != 0)
            throw std::invalid_argument(where + ": timestamp not minute-aligned");
        (void)parse_value(fields[2], where); // validated, used only by plots
        auto [it, inserted] = by_source[fields[0]].emplace(
            sec / 60, verdict_from_name(fields[3], where));
        if (!inserted)
            throw std::invalid_argument(where + ": duplicate verdict for " + fields[1]);
    }

    // Rebuild the evaluated windows and join on start times.
    std::vector<DatasetReport> rows;
    for (const auto& [source, days] : eval_datasets(run.plan)) {
        auto it = by_source.find(source);
        if (it == by_source.end())
            throw std::invalid_argument("verdicts carry no rows for dataset '" +
                                        source + "'");
        const auto& verdict_map = it->second;
        auto windows = materialize(run.traces.at(source), *days,
                                   run.events.at(source), config.sensors,
                                   config.window_length, config.detect_stride);
        if (verdict_map.size() != windows.windows.size())
            throw std::invalid_argument(
                "dataset '" + source + "': " + std::to_string(verdict_map.size()) +
                " verdicts for " + std::to_string(windows.windows.size()) +
                " windows");
        std::vector<Verdict> verdicts;
        std::vector<Label> labels;
        for (const auto& window : windows.windows) {
            auto found = verdict_map.find(window.start);
            if (found == verdict_map.end())
                throw std::invalid_argument(
                    "dataset '" + source + "': no verdict for the window at " +
                    format_timestamp(window.start * 60));
            verdicts.push_back(found->second);
            labels.push_back(window.label);
        }
        rows.push_back(dataset_report(source, confusion(verdicts, labels)));
        by_source.erase(it);
    }
    if (!by_source.empty())
        throw std::invalid_argument("verdicts name unknown dataset '" +
                                    by_source.begin()->first + "'");

    json eval_json;
    write_eval_outputs(out_dir, rows, to_string(config.detector), eval_json);
    json inputs = trace_inputs(config);
    inputs["verdicts"] = verdicts_path.string();
    write_manifest(out_dir, "eval", &config, inputs,
                   {"report_weighted.txt", "report_pooled.txt", "report_long.csv",
                    "eval.json"});
    return render_report(aggregate(rows, AggregationMode::weighted),
                         to_string(config.detector));
}

std::string run_eval_counts(const ConfusionCounts& counts, const std::string& detector,
                            const std::string& dataset,
                            const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::vector<DatasetReport> rows{dataset_report(dataset, counts)};
    json eval_json;
    write_eval_outputs(out_dir, rows, detector, eval_json);
    json inputs;
    inputs["counts"] = {{"tp", counts.tp},
                        {"fp", counts.fp},
                        {"tn", counts.tn},
                        {"fn", counts.fn}};
    write_manifest(out_dir, "eval", nullptr, inputs,
                   {"report_weighted.txt", "report_pooled.txt", "report_long.csv",
                    "eval.json"});
    return render_report(aggregate(rows, AggregationMode::weighted), detector);
}

std::string run_report(const std::vector<std::filesystem::path>& eval_files,
                       const std::filesystem::path& out_dir) {
    if (eval_files.empty())
        throw std::invalid_argument("report needs at least one eval.json");
    std::filesystem::create_directories(out_dir);
    std::ostringstream summary, long_rows;
    bool first = true;
    json inputs = json::array();
    for (const auto& path : eval_files) {
        json j;
        try {
            j = json::parse(read_file(path));
        } catch (const json::parse_error& e) {
            throw std::invalid_argument(path.string() + " is not valid JSON: " +
                                        e.what());
        }
        std::string detector = j.at("detector").get<std::string>();
        std::vector<DatasetReport> rows;
        for (const auto& row : j.at("rows")) {
            ConfusionCounts counts;
            counts.tp = row.at("tp").get<std::size_t>();
            counts.fp = row.at("fp").get<std::size_t>();
            counts.tn = row.at("tn").get<std::size_t>();
            counts.fn = row.at("fn").get<std::size_t>();
            rows.push_back(dataset_report(row.at("dataset").get<std::string>(),
                                          counts,
                                          row.value("excluded", false)));
        }
        EvalReport weighted = aggregate(rows, AggregationMode::weighted);
        if (!first) summary << "\n";
        first = false;
        summary << render_report(weighted, detector);
        std::string full = long_format(weighted, detector);
        if (long_rows.tellp() == 0) {
            long_rows << full; // keep the header once
        } else {
            long_rows << full.substr(full.find('\n') + 1);
        }
        inputs.push_back(path.string());
    }
    atomic_write(out_dir / "summary.txt", summary.str());
    atomic_write(out_dir / "summary_long.csv", long_rows.str());
    json input_obj;
    input_obj["eval_files"] = std::move(inputs);
    write_manifest(out_dir, "report", nullptr, input_obj,
                   {"summary.txt", "summary_long.csv"});
    return summary.str();
}

RunConfig config_from_manifest(const std::filesystem::path& manifest_path) {
    json j;
    try {
        j = json::parse(read_file(manifest_path));
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(manifest_path.string() + " is not valid JSON: " +
                                    e.what());
    }
    if (!j.contains("config"))
        throw std::invalid_argument(manifest_path.string() +
                                    " carries no config echo");
    return run_config_from_json(j.at("config").dump());
}

} // namespace hive
