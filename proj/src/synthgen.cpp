#include "hive/synthgen.hpp"

#include "hive/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hive {

namespace {

constexpr double kRuleThreshold = 35.5; // degC, the rule detector's line
constexpr Minute kDay = 1440;

void validate_profile(const HiveProfile& p) {
    if (!std::isfinite(p.core_temperature))
        throw std::invalid_argument("synthgen: core temperature must be finite");
    if (p.core_temperature + 1.0 > kRuleThreshold + 1e-9)
        throw std::invalid_argument(
            "synthgen: core temperature must keep the +/-1 envelope under 35.5");
    if (p.temperature_sensors.empty())
        throw std::invalid_argument("synthgen: at least one temperature sensor");
    if (p.noise_std < 0.0 || p.diurnal_amplitude < 0.0)
        throw std::invalid_argument("synthgen: negative noise or amplitude");
    if (p.coupling <= 0.0 || p.coupling >= 1.0)
        throw std::invalid_argument("synthgen: coupling must lie in (0, 1)");
    if (p.correlation_time <= 0.0)
        throw std::invalid_argument("synthgen: correlation time must be positive");
}

} // namespace

std::string to_string(EventKind kind) {
    switch (kind) {
    case EventKind::swarm: return "swarm";
    case EventKind::opened_hive: return "opened_hive";
    case EventKind::treatment: return "treatment";
    case EventKind::sensor_dropout: return "sensor_dropout";
    }
    throw std::logic_error("EventKind: unreachable");
}

EventKind event_kind_from_string(const std::string& s) {
    if (s == "swarm") return EventKind::swarm;
    if (s == "opened_hive") return EventKind::opened_hive;
    if (s == "treatment") return EventKind::treatment;
    if (s == "sensor_dropout") return EventKind::sensor_dropout;
    throw std::invalid_argument("unknown event kind: " + s);
}

SensorTrace generate_normal(const HiveProfile& profile, std::size_t days) {
    validate_profile(profile);
    if (days < 1) throw std::invalid_argument("generate_normal: days must be >= 1");

    const std::size_t s_count = profile.temperature_sensors.size();
    const std::size_t samples = days * static_cast<std::size_t>(kDay);

    SensorTrace trace;
    trace.source = profile.name;
    trace.sensor_ids = profile.temperature_sensors;
    if (profile.weight_sensor) trace.sensor_ids.push_back(profile.weight_id);
    trace.start = 0;
    trace.values.assign(trace.sensor_ids.size(), std::vector<double>(samples, 0.0));

    // Spatially coupled noise: each sensor mixes a chain of latent
    // first-order processes with kernel w^distance, so correlation falls off
    // with sensor distance. Each mix is normalized back to unit variance.
    const double w = profile.coupling;
    std::vector<double> norm(s_count, 0.0);
    for (std::size_t s = 0; s < s_count; ++s) {
        double sum = 0.0;
        for (std::size_t j = 0; j < s_count; ++j) {
            const double k = std::pow(w, static_cast<double>(s > j ? s - j : j - s));
            sum += k * k;
        }
        norm[s] = std::sqrt(sum);
    }

    const double rho = std::exp(-1.0 / profile.correlation_time);
    const double kick = std::sqrt(1.0 - rho * rho);

    Rng temp_rng(derive_seed(profile.seed, "temperature"));
    const double phase = temp_rng.uniform(0.0, 6.283185307179586);
    std::vector<double> latent(s_count);
    for (std::size_t j = 0; j < s_count; ++j) latent[j] = temp_rng.normal();

    for (std::size_t t = 0; t < samples; ++t) {
        if (t > 0)
            for (std::size_t j = 0; j < s_count; ++j)
                latent[j] = rho * latent[j] + kick * temp_rng.normal();
        const double day_angle =
            6.283185307179586 * static_cast<double>(t % kDay) / static_cast<double>(kDay);
        const double diurnal = profile.diurnal_amplitude * std::sin(day_angle + phase);
        for (std::size_t s = 0; s < s_count; ++s) {
            double mix = 0.0;
            for (std::size_t j = 0; j < s_count; ++j)
                mix += std::pow(w, static_cast<double>(s > j ? s - j : j - s)) * latent[j];
            const double jitter = 0.15 * temp_rng.normal();
            const double raw = diurnal + profile.noise_std * (mix / norm[s] + jitter);
            // Soft clamp: the envelope stays strictly inside +/-0.95 degC, so
            // normal data can never brush the rule threshold.
            trace.values[s][t] =
                profile.core_temperature + 0.95 * std::tanh(raw / 0.95);
        }
    }

    if (profile.weight_sensor) {
        Rng weight_rng(derive_seed(profile.seed, "weight"));
        double ou = weight_rng.normal();
        auto& col = trace.values[s_count];
        for (std::size_t t = 0; t < samples; ++t) {
            if (t > 0) ou = rho * ou + kick * weight_rng.normal();
            col[t] = profile.base_weight +
                     profile.weight_drift * static_cast<double>(t) /
                         static_cast<double>(kDay) +
                     0.1 * ou;
        }
    }
    return trace;
}

namespace {

// Super-threshold sample count for a swarm: requested width, or duration/3,
// snapped down to the duration's parity (the parabola is sample-symmetric
// about its center, so only matching parities are realizable exactly).
Minute swarm_width(const EventTemplate& tpl) {
    const Minute d = tpl.duration;
    Minute k;
    if (tpl.magnitude == 0.0) {
        k = static_cast<Minute>(std::llround(static_cast<double>(d) / 3.0));
        if ((k % 2) != (d % 2)) --k;
        k = std::clamp<Minute>(k, 2 + (d % 2), 20);
    } else {
        const double rounded = std::round(tpl.magnitude);
        if (std::abs(tpl.magnitude - rounded) > 1e-9)
            throw std::invalid_argument("swarm: super-threshold width must be whole minutes");
        k = static_cast<Minute>(rounded);
        if (k < 2 || k > 20)
            throw std::invalid_argument("swarm: super-threshold width outside [2, 20]");
        if ((k % 2) != (d % 2))
            throw std::invalid_argument(
                "swarm: super-threshold width parity must match the duration");
    }
    return k;
}

} // namespace

InjectionRecord inject_event(SensorTrace& trace, const EventTemplate& tpl,
                             const std::vector<InjectionRecord>& existing) {
    if (tpl.duration < 1) throw std::invalid_argument("inject_event: empty duration");
    if (tpl.onset < trace.start || tpl.onset + tpl.duration > trace.end())
        throw std::invalid_argument("inject_event: event outside the trace span");

    // Resolve the affected sensors; empty means every temperature sensor
    // (any column but the weight channel is treated as temperature).
    std::vector<std::string> ids = tpl.sensors;
    const bool has_weight = !trace.sensor_ids.empty() &&
                            trace.sensor_ids.back() == "W"; // convention: weight last
    if (ids.empty()) {
        ids = trace.sensor_ids;
        if (has_weight) ids.pop_back();
    }
    std::vector<std::size_t> cols;
    cols.reserve(ids.size());
    for (const auto& id : ids) cols.push_back(trace.sensor_index(id));

    InjectionRecord record;
    record.kind = tpl.kind;
    record.start = tpl.onset;
    record.end = tpl.onset + tpl.duration;
    record.sensors = ids;
    // The weight channel carries every non-dropout event's signature too.
    const bool touch_weight = has_weight && tpl.kind != EventKind::sensor_dropout &&
                              std::find(ids.begin(), ids.end(), "W") == ids.end();
    if (touch_weight) record.sensors.push_back("W");

    for (const auto& prior : existing) {
        if (record.end <= prior.start || prior.end <= record.start) continue;
        for (const auto& id : record.sensors)
            if (std::find(prior.sensors.begin(), prior.sensors.end(), id) !=
                prior.sensors.end())
                throw std::invalid_argument(
                    "inject_event: overlapping events on sensor " + id);
    }

    const double core = 34.5; // replaced-shape baseline
    const double margin = kRuleThreshold - core;
    const std::size_t first = static_cast<std::size_t>(tpl.onset - trace.start);
    const auto d = static_cast<double>(tpl.duration);

    switch (tpl.kind) {
    case EventKind::swarm: {
        if (tpl.duration < 20 || tpl.duration > 60)
            throw std::invalid_argument("swarm: duration outside [20, 60] minutes");
        const Minute k = swarm_width(tpl);
        const double amp =
            margin / (1.0 - (static_cast<double>(k) / d) * (static_cast<double>(k) / d));
        const double center = (d - 1.0) / 2.0;
        const double radius = d / 2.0;
        for (Minute i = 0; i < tpl.duration; ++i) {
            const double x = (static_cast<double>(i) - center) / radius;
            const double value = core + amp * (1.0 - x * x);
            for (std::size_t c : cols) trace.values[c][first + static_cast<std::size_t>(i)] = value;
        }
        if (touch_weight) {
            auto& wcol = trace.values[trace.sensor_ids.size() - 1];
            for (Minute i = 0; i < tpl.duration; ++i)
                wcol[first + static_cast<std::size_t>(i)] +=
                    -1.5 * std::min(1.0, static_cast<double>(i) / 5.0);
        }
        break;
    }
    case EventKind::opened_hive: {
        const double depth = tpl.magnitude == 0.0 ? 2.8 : tpl.magnitude;
        if (depth <= 0.0) throw std::invalid_argument("opened_hive: depth must be positive");
        const double delay = std::min(5.0, d / 4.0);
        for (Minute i = 0; i < tpl.duration; ++i) {
            const double u = static_cast<double>(i);
            double dev = 0.0;
            if (u >= delay)
                dev = -depth * std::sin(3.141592653589793 * (u - delay) / (d - delay));
            for (std::size_t c : cols) trace.values[c][first + static_cast<std::size_t>(i)] = core + dev;
        }
        if (touch_weight) {
            auto& wcol = trace.values[trace.sensor_ids.size() - 1];
            for (Minute i = 0; i < tpl.duration; ++i) {
                const double u = static_cast<double>(i);
                wcol[first + static_cast<std::size_t>(i)] +=
                    -2.0 * std::sqrt(std::sin(3.141592653589793 * std::min(u / d, 0.999)));
            }
        }
        break;
    }
    case EventKind::treatment: {
        const double rise = tpl.magnitude == 0.0 ? 0.8 : tpl.magnitude;
        if (rise <= 0.0) throw std::invalid_argument("treatment: rise must be positive");
        if (rise >= margin)
            throw std::invalid_argument(
                "treatment: rise must stay under the 35.5 rule threshold");
        for (Minute i = 0; i < tpl.duration; ++i) {
            const double u = static_cast<double>(i);
            const double shape = std::min(1.0, u / 10.0) * std::exp(-u / (d / 2.0));
            for (std::size_t c : cols)
                trace.values[c][first + static_cast<std::size_t>(i)] = core + rise * shape;
        }
        if (touch_weight) {
            auto& wcol = trace.values[trace.sensor_ids.size() - 1];
            for (Minute i = 0; i < tpl.duration; ++i)
                wcol[first + static_cast<std::size_t>(i)] +=
                    1.0 * std::min(1.0, static_cast<double>(i) / 5.0);
        }
        break;
    }
    case EventKind::sensor_dropout: {
        for (Minute i = 0; i < tpl.duration; ++i)
            for (std::size_t c : cols)
                trace.values[c][first + static_cast<std::size_t>(i)] =
                    std::numeric_limits<double>::quiet_NaN();
        break;
    }
    }
    return record;
}

std::vector<LabeledEvent> to_labeled_events(const std::vector<InjectionRecord>& records) {
    std::vector<LabeledEvent> events;
    for (const auto& r : records) {
        if (r.kind == EventKind::sensor_dropout) continue;
        LabeledEvent e;
        e.kind = r.kind == EventKind::swarm ? Label::swarm : Label::other_anomaly;
        e.start = r.start;
        e.end = r.end;
        e.verified = true;
        events.push_back(e);
    }
    return events;
}

std::vector<GeneratedHive> make_benchmark(const std::vector<HiveScenario>& hives) {
    if (hives.empty()) throw std::invalid_argument("make_benchmark: no hives");
    std::vector<GeneratedHive> out;
    out.reserve(hives.size());
    for (const auto& scenario : hives) {
        if (scenario.days.empty())
            throw std::invalid_argument("make_benchmark: a hive needs at least one day");
        GeneratedHive hive;
        hive.trace = generate_normal(scenario.profile, scenario.days.size());
        for (std::size_t day = 0; day < scenario.days.size(); ++day) {
            const Minute day_start = static_cast<Minute>(day) * kDay;
            bool anomalous = false;
            for (const auto& event : scenario.days[day].events) {
                if (event.onset < 0 || event.onset + event.duration > kDay)
                    throw std::invalid_argument(
                        "make_benchmark: an event leaves its day");
                EventTemplate shifted = event;
                shifted.onset += day_start;
                hive.injections.push_back(
                    inject_event(hive.trace, shifted, hive.injections));
                anomalous = anomalous || event.kind != EventKind::sensor_dropout;
            }
            DayTag tag;
            tag.source = scenario.profile.name;
            tag.start = day_start;
            tag.length = kDay;
            tag.anomalous = anomalous;
            hive.days.push_back(tag);
        }
        hive.events = to_labeled_events(hive.injections);
        out.push_back(std::move(hive));
    }
    return out;
}

std::vector<HiveScenario> default_benchmark_scenario(std::uint64_t seed) {
    std::vector<HiveScenario> hives(2);

    auto& north = hives[0];
    north.profile.name = "north";
    north.profile.weight_sensor = true;
    north.profile.seed = derive_seed(seed, "north");
    north.days.resize(12);
    {
        EventTemplate dropout;
        dropout.kind = EventKind::sensor_dropout;
        dropout.onset = 300;
        dropout.duration = 30;
        dropout.sensors = {"T8"};
        north.days[3].events.push_back(dropout);
    }
    for (std::size_t day = 8; day < 12; ++day) {
        EventTemplate swarm;
        swarm.kind = EventKind::swarm;
        swarm.onset = 600;
        swarm.duration = 35;
        north.days[day].events.push_back(swarm);
    }

    auto& south = hives[1];
    south.profile.name = "south";
    south.profile.weight_sensor = true;
    south.profile.seed = derive_seed(seed, "south");
    south.days.resize(3);
    {
        EventTemplate swarm;
        swarm.kind = EventKind::swarm;
        swarm.onset = 600;
        swarm.duration = 35;
        south.days[1].events.push_back(swarm);
        EventTemplate opened;
        opened.kind = EventKind::opened_hive;
        opened.onset = 900;
        opened.duration = 45;
        south.days[1].events.push_back(opened);
    }
    {
        EventTemplate swarm;
        swarm.kind = EventKind::swarm;
        swarm.onset = 0;
        swarm.duration = 20;
        south.days[2].events.push_back(swarm);
        EventTemplate treatment;
        treatment.kind = EventKind::treatment;
        treatment.onset = 700;
        treatment.duration = 60;
        south.days[2].events.push_back(treatment);
    }
    return hives;
}

} // namespace hive
