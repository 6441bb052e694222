#include "hive/windowing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hive {

namespace {

// Overlap in minutes between [a0, a1) and [b0, b1).
Minute overlap(Minute a0, Minute a1, Minute b0, Minute b1) {
    return std::max<Minute>(0, std::min(a1, b1) - std::max(a0, b0));
}

Label label_for(Minute w0, Minute w1, const std::vector<LabeledEvent>& events) {
    bool other = false;
    for (const auto& e : events) {
        if (overlap(w0, w1, e.start, e.end) < 1) continue;
        if (e.kind == Label::swarm) return Label::swarm; // precedence on conflict
        other = true;
    }
    return other ? Label::other_anomaly : Label::normal;
}

} // namespace

WindowSet make_windows_in_range(const SensorTrace& trace,
                                const std::vector<std::string>& sensors,
                                std::size_t length, std::size_t stride,
                                const std::vector<LabeledEvent>& events,
                                Minute range_start, Minute range_length) {
    if (length < 1 || stride < 1)
        throw std::invalid_argument("window length and stride must be >= 1");
    if (range_start < trace.start || range_start + range_length > trace.end())
        throw std::invalid_argument("window range exceeds trace extent");
    if (static_cast<Minute>(length) > range_length)
        throw std::invalid_argument("window length exceeds trace duration");

    std::vector<std::size_t> idx;
    idx.reserve(sensors.size());
    for (const auto& id : sensors) idx.push_back(trace.sensor_index(id));

    WindowSet out;
    const auto base = static_cast<std::size_t>(range_start - trace.start);
    const auto span = static_cast<std::size_t>(range_length);
    for (std::size_t off = 0; off + length <= span; off += stride) {
        Window w;
        w.start = range_start + static_cast<Minute>(off);
        w.length = length;
        w.sensors = idx.size();
        w.data.resize(length * idx.size());
        bool missing = false;
        for (std::size_t t = 0; t < length && !missing; ++t) {
            for (std::size_t s = 0; s < idx.size(); ++s) {
                double v = trace.values[idx[s]][base + off + t];
                if (std::isnan(v)) { missing = true; break; }
                w.at(t, s) = v;
            }
        }
        if (missing) {
            ++out.excluded_missing;
            continue;
        }
        w.label = label_for(w.start, w.start + static_cast<Minute>(length), events);
        out.windows.push_back(std::move(w));
    }
    return out;
}

WindowSet make_windows(const SensorTrace& trace,
                       const std::vector<std::string>& sensors,
                       std::size_t length, std::size_t stride,
                       const std::vector<LabeledEvent>& events) {
    return make_windows_in_range(trace, sensors, length, stride, events,
                                 trace.start, trace.end() - trace.start);
}

Scaler fit_scaler(const std::vector<Window>& training) {
    if (training.empty())
        throw std::invalid_argument("fit_scaler: no training windows");
    const std::size_t sensors = training.front().sensors;
    std::vector<double> sum(sensors, 0.0), sumsq(sensors, 0.0);
    std::size_t count = 0;
    for (const auto& w : training) {
        if (w.sensors != sensors)
            throw std::invalid_argument("fit_scaler: inconsistent sensor counts");
        for (std::size_t t = 0; t < w.length; ++t)
            for (std::size_t s = 0; s < sensors; ++s) {
                sum[s] += w.at(t, s);
                sumsq[s] += w.at(t, s) * w.at(t, s);
            }
        count += w.length;
    }
    Scaler sc;
    sc.mean.resize(sensors);
    sc.stddev.resize(sensors);
    for (std::size_t s = 0; s < sensors; ++s) {
        sc.mean[s] = sum[s] / static_cast<double>(count);
        double var = sumsq[s] / static_cast<double>(count) - sc.mean[s] * sc.mean[s];
        var = std::max(var, 0.0);
        sc.stddev[s] = std::sqrt(var);
        if (!(sc.stddev[s] > 0.0))
            throw std::invalid_argument("fit_scaler: zero-variance sensor at index " +
                                        std::to_string(s));
    }
    return sc;
}

Window apply_scaler(const Scaler& scaler, const Window& window) {
    if (scaler.mean.size() != window.sensors)
        throw std::invalid_argument("apply_scaler: sensor count mismatch");
    Window out = window;
    for (std::size_t t = 0; t < out.length; ++t)
        for (std::size_t s = 0; s < out.sensors; ++s)
            out.at(t, s) = (window.at(t, s) - scaler.mean[s]) / scaler.stddev[s];
    return out;
}

Window invert_scaler(const Scaler& scaler, const Window& window) {
    if (scaler.mean.size() != window.sensors)
        throw std::invalid_argument("invert_scaler: sensor count mismatch");
    Window out = window;
    for (std::size_t t = 0; t < out.length; ++t)
        for (std::size_t s = 0; s < out.sensors; ++s)
            out.at(t, s) = window.at(t, s) * scaler.stddev[s] + scaler.mean[s];
    return out;
}

std::vector<double> flatten(const Window& window) {
    std::vector<double> flat(window.length * window.sensors);
    for (std::size_t s = 0; s < window.sensors; ++s)
        for (std::size_t t = 0; t < window.length; ++t)
            flat[s * window.length + t] = window.at(t, s);
    return flat;
}

Window unflatten(std::span<const double> flat, Minute start,
                 std::size_t length, std::size_t sensors, Label label) {
    if (flat.size() != length * sensors)
        throw std::invalid_argument("unflatten: size mismatch");
    Window w;
    w.start = start;
    w.length = length;
    w.sensors = sensors;
    w.label = label;
    w.data.resize(length * sensors);
    for (std::size_t s = 0; s < sensors; ++s)
        for (std::size_t t = 0; t < length; ++t)
            w.at(t, s) = flat[s * length + t];
    return w;
}

SplitPlan build_split(const std::vector<DayTag>& days, const SplitConfig& config) {
    // Reject overlapping day tags within a source.
    for (std::size_t i = 0; i < days.size(); ++i)
        for (std::size_t j = i + 1; j < days.size(); ++j)
            if (days[i].source == days[j].source &&
                overlap(days[i].start, days[i].start + days[i].length,
                        days[j].start, days[j].start + days[j].length) > 0)
                throw std::invalid_argument("build_split: overlapping day tags in source " +
                                            days[i].source);

    std::vector<DayTag> normal, anomalous;
    std::vector<std::pair<std::string, std::vector<DayTag>>> tests;
    for (const auto& d : days) {
        if (d.source == config.training_source) {
            (d.anomalous ? anomalous : normal).push_back(d);
        } else if (d.anomalous) {
            auto it = std::find_if(tests.begin(), tests.end(),
                                   [&](const auto& p) { return p.first == d.source; });
            if (it == tests.end()) {
                tests.emplace_back(d.source, std::vector<DayTag>{d});
            } else {
                it->second.push_back(d);
            }
        }
        // Normal days of non-training sources are unused: the split trains on
        // one hive and tests the others only on their anomalous periods.
    }
    if (normal.empty())
        throw std::invalid_argument("build_split: training source has no normal days");
    if (anomalous.empty())
        throw std::invalid_argument("build_split: training source has no holdout days");

    auto by_start = [](const DayTag& a, const DayTag& b) { return a.start < b.start; };
    std::sort(normal.begin(), normal.end(), by_start);
    std::sort(anomalous.begin(), anomalous.end(), by_start);
    for (auto& [name, list] : tests) std::sort(list.begin(), list.end(), by_start);

    // Chronological tail of the normal days becomes validation; at least one
    // day so the autoencoder always has an early-stopping signal.
    auto n_val = static_cast<std::size_t>(
        std::floor(config.validation_fraction * static_cast<double>(normal.size())));
    n_val = std::clamp<std::size_t>(n_val, 1, normal.size() - 1);

    SplitPlan plan;
    plan.training_source = config.training_source;
    plan.training.assign(normal.begin(), normal.end() - static_cast<std::ptrdiff_t>(n_val));
    plan.validation.assign(normal.end() - static_cast<std::ptrdiff_t>(n_val), normal.end());
    plan.holdout = std::move(anomalous);
    plan.tests = std::move(tests);
    return plan;
}

WindowSet materialize(const SensorTrace& trace,
                      const std::vector<DayTag>& days,
                      const std::vector<LabeledEvent>& events,
                      const std::vector<std::string>& sensors,
                      std::size_t length, std::size_t stride) {
    WindowSet out;
    for (const auto& d : days) {
        if (d.source != trace.source)
            throw std::invalid_argument("materialize: day tag for " + d.source +
                                        " applied to trace " + trace.source);
        auto part = make_windows_in_range(trace, sensors, length, stride, events,
                                          d.start, d.length);
        out.excluded_missing += part.excluded_missing;
        for (auto& w : part.windows) out.windows.push_back(std::move(w));
    }
    return out;
}

} // namespace hive
