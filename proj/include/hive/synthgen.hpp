#pragma once

#include "hive/types.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace hive {

// Shape of a synthetic hive: an adjacency chain of brood-nest temperature
// sensors (declaration order = physical order) and an optional weight
// channel. Temperature sits near the core value with a small diurnal swing
// and spatially coupled noise, soft-clamped so every normal sample stays
// strictly inside core +/- 1 degC — which keeps normal data free of
// rule-detectable runs by construction.
struct HiveProfile {
    std::string name = "hive";
    std::vector<std::string> temperature_sensors = {"T6", "T7", "T8"};
    bool weight_sensor = false;
    std::string weight_id = "W";
    double core_temperature = 34.5;
    double noise_std = 0.35;         // stationary deviation scale, degC
    double diurnal_amplitude = 0.3;  // 24-h sinusoid amplitude, degC
    double coupling = 0.75;          // spatial kernel base in (0,1)
    double correlation_time = 120.0; // noise memory, minutes
    double base_weight = 20.0;       // kg
    double weight_drift = 0.05;      // kg per day (nectar intake)
    std::uint64_t seed = 0;
};

enum class EventKind { swarm, opened_hive, treatment, sensor_dropout };

std::string to_string(EventKind kind);
EventKind event_kind_from_string(const std::string& s);

// One injected disturbance. During an event the affected temperature sensors
// follow a deterministic parametric shape in place of the normal signal
// (anchored at the default 34.5 degC core), so each kind's
// rule-detectability is exact:
//   swarm        inverted parabola peaking above the 35.5 degC rule
//                threshold; `magnitude` is the width of the super-threshold
//                segment in minutes (0 = duration/3, parity-adjusted). Must
//                share the duration's parity and lie in [2, 20]; duration in
//                [20, 60]. A weight channel drops sharply and stays low.
//   opened_hive  delayed dip to roughly 2.8 degC below core, recovering by
//                the end; never crosses the rule threshold. Weight drops fast
//                and recovers.
//   treatment    smooth rise of `magnitude` degC (default 0.8, capped under
//                the rule threshold) decaying over the duration; weight steps
//                up and stays.
//   sensor_dropout  affected sensors read as missing; values are not altered
//                   and no anomaly label is produced (windowing's
//                   missing-value rule excludes the windows instead).
// Empty `sensors` means every temperature sensor (dropout included).
struct EventTemplate {
    EventKind kind = EventKind::swarm;
    Minute onset = 0;    // absolute trace minute
    Minute duration = 35;
    double magnitude = 0.0; // 0 = kind-specific default, see above
    std::vector<std::string> sensors;
};

// What an injection actually touched: the half-open minute range and the
// sensors written (or blanked).
struct InjectionRecord {
    EventKind kind = EventKind::swarm;
    Minute start = 0;
    Minute end = 0;
    std::vector<std::string> sensors;
};

// Minute-resolution normal trace: `days` days starting at minute 0. Every
// temperature sample lies strictly inside core +/- 1 degC, adjacent sensors
// correlate more strongly than non-adjacent ones, and the rule-based vet
// reports nothing, for any seed.
SensorTrace generate_normal(const HiveProfile& profile, std::size_t days);

// Applies one event to the trace. `existing` is checked so two events never
// touch the same sensor minute; the caller appends the returned record.
// Throws std::invalid_argument on overlap, an event outside the trace span,
// an unknown sensor, or shape parameters outside the documented ranges.
InjectionRecord inject_event(SensorTrace& trace, const EventTemplate& tpl,
                             const std::vector<InjectionRecord>& existing);

// Ground-truth labels for the injections: swarm events label swarm, opened
// hive and treatment label other_anomaly, dropouts produce no label.
std::vector<LabeledEvent> to_labeled_events(const std::vector<InjectionRecord>& records);

// One scenario day; event onsets are relative to the day's first minute and
// must stay inside the day. A day is anomalous when it carries at least one
// labeled-anomaly event (dropout alone leaves it normal).
struct ScenarioDay {
    std::vector<EventTemplate> events;
};

struct HiveScenario {
    HiveProfile profile;
    std::vector<ScenarioDay> days;
};

struct GeneratedHive {
    SensorTrace trace;
    std::vector<InjectionRecord> injections;
    std::vector<LabeledEvent> events;
    std::vector<DayTag> days;
};

// Generates every hive of a scenario: normal base signal, injected events,
// labels, and day tags ready for the day-level split. Reproducible from the
// profiles' seeds alone.
std::vector<GeneratedHive> make_benchmark(const std::vector<HiveScenario>& hives);

// The canned two-hive scenario the end-to-end benchmark runs: a training
// hive whose four anomalous days carry one 35-minute swarm each (24 swarm
// windows at the 15-minute scoring stride) and a test hive with two
// anomalous days totalling 8 swarm windows plus an opened-hive disturbance,
// a treatment day, and a dropout on one training day.
std::vector<HiveScenario> default_benchmark_scenario(std::uint64_t seed);

} // namespace hive
