#include <doctest.h>

#include "hive/evaluator.hpp"
#include "hive/rba.hpp"
#include "hive/rng.hpp"
#include "hive/synthgen.hpp"
#include "hive/windowing.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <vector>

using namespace hive;

TEST_CASE("normal traces stay in the envelope and carry no rule runs") {
    SUBCASE("defaults, one day") {
        HiveProfile profile;
        auto trace = generate_normal(profile, 1);
        REQUIRE(trace.sensors() == 3);
        REQUIRE(trace.samples() == 1440);
        for (const auto& column : trace.values)
            for (double v : column) {
                CHECK(v > 33.5);
                CHECK(v < 35.5);
                CHECK(std::abs(v - 34.5) < 1.0);
            }
    }
    SUBCASE("degenerate parameters give the exact core") {
        HiveProfile profile;
        profile.noise_std = 0.0;
        profile.diurnal_amplitude = 0.0;
        auto trace = generate_normal(profile, 1);
        for (const auto& column : trace.values)
            for (double v : column) CHECK(v == 34.5);
    }
    SUBCASE("the rule-based vet is empty for every seed") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            HiveProfile profile;
            profile.seed = seed;
            profile.weight_sensor = true;
            auto trace = generate_normal(profile, 2);
            CHECK(vet_training_data(trace, RbaConfig{}).empty());
        }
    }
    SUBCASE("deterministic, and the weight channel leaves temperature alone") {
        HiveProfile profile;
        profile.seed = 7;
        auto a = generate_normal(profile, 2);
        auto b = generate_normal(profile, 2);
        CHECK(a.values == b.values);
        profile.weight_sensor = true;
        auto c = generate_normal(profile, 2);
        REQUIRE(c.sensors() == 4);
        for (std::size_t s = 0; s < 3; ++s) CHECK(c.values[s] == a.values[s]);
        // Weight drifts upward: day means separate once the drift dominates
        // the slow noise component.
        profile.weight_drift = 1.0;
        auto d = generate_normal(profile, 2);
        double day0 = 0.0, day1 = 0.0;
        for (std::size_t t = 0; t < 1440; ++t) {
            day0 += d.values[3][t];
            day1 += d.values[3][t + 1440];
        }
        CHECK(day1 - day0 > 0.5 * 1440);
    }
    SUBCASE("adjacent sensors correlate more than distant ones") {
        HiveProfile profile;
        profile.seed = 3;
        auto trace = generate_normal(profile, 2);
        std::vector<DayTag> days{{"hive", 0, 2880, false}};
        auto report = sensor_correlations(trace, {"T6", "T7", "T8"}, days);
        CHECK(report.normal[0][1] > 0.8);
        CHECK(report.normal[1][2] > 0.8);
        CHECK(report.normal[0][1] > report.normal[0][2]);
        CHECK(report.normal[1][2] > report.normal[0][2]);
    }
    SUBCASE("profile validation") {
        HiveProfile profile;
        CHECK_THROWS_AS((void)generate_normal(profile, 0), std::invalid_argument);
        profile.core_temperature = 35.0;
        CHECK_THROWS_AS((void)generate_normal(profile, 1), std::invalid_argument);
        profile = {};
        profile.coupling = 1.0;
        CHECK_THROWS_AS((void)generate_normal(profile, 1), std::invalid_argument);
        profile = {};
        profile.temperature_sensors.clear();
        CHECK_THROWS_AS((void)generate_normal(profile, 1), std::invalid_argument);
        profile = {};
        profile.correlation_time = 0.0;
        CHECK_THROWS_AS((void)generate_normal(profile, 1), std::invalid_argument);
    }
}

TEST_CASE("swarm injection is rule-detectable with an exact run") {
    HiveProfile profile;
    profile.seed = 11;
    auto trace = generate_normal(profile, 1);

    SUBCASE("requested ten-minute segment") {
        EventTemplate swarm;
        swarm.onset = 400;
        swarm.duration = 30;
        swarm.magnitude = 10.0;
        auto record = inject_event(trace, swarm, {});
        CHECK(record.start == 400);
        CHECK(record.end == 430);
        for (std::size_t s = 0; s < 3; ++s) {
            auto runs = rba_detect(trace.values[s], RbaConfig{});
            REQUIRE(runs.size() == 1);
            CHECK(runs[0].first == 410);
            CHECK(runs[0].last == 419);
        }
    }
    SUBCASE("default width for an odd duration") {
        EventTemplate swarm;
        swarm.onset = 700;
        swarm.duration = 35;
        (void)inject_event(trace, swarm, {});
        auto runs = rba_detect(trace.values[0], RbaConfig{});
        REQUIRE(runs.size() == 1);
        CHECK(runs[0].length() == 11);
        CHECK(runs[0].first == 712);
        CHECK(runs[0].last == 722);
        // The peak clears the threshold.
        double peak = 0.0;
        for (std::size_t t = 700; t < 735; ++t)
            peak = std::max(peak, trace.values[0][t]);
        CHECK(peak > 35.5);
    }
    SUBCASE("shape validation") {
        EventTemplate swarm;
        swarm.onset = 100;
        swarm.duration = 19;
        CHECK_THROWS_AS((void)inject_event(trace, swarm, {}), std::invalid_argument);
        swarm.duration = 61;
        CHECK_THROWS_AS((void)inject_event(trace, swarm, {}), std::invalid_argument);
        swarm.duration = 30;
        swarm.magnitude = 9.0; // parity mismatch with an even duration
        CHECK_THROWS_AS((void)inject_event(trace, swarm, {}), std::invalid_argument);
        swarm.magnitude = 22.0;
        CHECK_THROWS_AS((void)inject_event(trace, swarm, {}), std::invalid_argument);
        swarm.magnitude = 10.5;
        CHECK_THROWS_AS((void)inject_event(trace, swarm, {}), std::invalid_argument);
        swarm.magnitude = 0.0;
        swarm.onset = 1430; // leaves the trace
        CHECK_THROWS_AS((void)inject_event(trace, swarm, {}), std::invalid_argument);
    }
}

TEST_CASE("non-swarm injections are never rule-detectable") {
    HiveProfile profile;
    profile.seed = 13;
    profile.weight_sensor = true;
    auto trace = generate_normal(profile, 1);

    SUBCASE("opened hive dips below 33 and recovers") {
        EventTemplate opened;
        opened.kind = EventKind::opened_hive;
        opened.onset = 500;
        opened.duration = 45;
        auto record = inject_event(trace, opened, {});
        double low = 100.0;
        for (std::size_t t = 500; t < 545; ++t) low = std::min(low, trace.values[0][t]);
        CHECK(low < 33.0);
        CHECK(std::abs(trace.values[0][544] - 34.5) < 0.3); // nearly recovered
        for (std::size_t s = 0; s < 3; ++s)
            CHECK(rba_detect(trace.values[s], RbaConfig{}).empty());
        // Weight dropped inside the event span.
        double wlow = 1e9;
        for (std::size_t t = 500; t < 545; ++t)
            wlow = std::min(wlow, trace.values[3][t]);
        CHECK(wlow < 19.0);
        CHECK(record.sensors.size() == 4); // three temperatures plus weight
    }
    SUBCASE("treatment rises but stays under the rule line") {
        EventTemplate treatment;
        treatment.kind = EventKind::treatment;
        treatment.onset = 300;
        treatment.duration = 60;
        (void)inject_event(trace, treatment, {});
        double high = 0.0;
        for (std::size_t t = 300; t < 360; ++t)
            high = std::max(high, trace.values[1][t]);
        CHECK(high > 34.9);
        CHECK(high < 35.5);
        for (std::size_t s = 0; s < 3; ++s)
            CHECK(rba_detect(trace.values[s], RbaConfig{}).empty());
        // Weight steps up.
        CHECK(trace.values[3][330] > trace.values[3][299] + 0.5);
        // An over-threshold rise is rejected up front.
        EventTemplate hot = treatment;
        hot.onset = 1000;
        hot.magnitude = 1.2;
        CHECK_THROWS_AS((void)inject_event(trace, hot, {}), std::invalid_argument);
    }
    SUBCASE("dropout blanks only the listed sensor and yields no label") {
        EventTemplate dropout;
        dropout.kind = EventKind::sensor_dropout;
        dropout.onset = 200;
        dropout.duration = 15;
        dropout.sensors = {"T7"};
        auto record = inject_event(trace, dropout, {});
        for (std::size_t t = 200; t < 215; ++t) {
            CHECK(std::isnan(trace.values[1][t]));
            CHECK_FALSE(std::isnan(trace.values[0][t]));
            CHECK_FALSE(std::isnan(trace.values[3][t]));
        }
        CHECK(to_labeled_events({record}).empty());
    }
}

TEST_CASE("overlap rules and label agreement") {
    HiveProfile profile;
    profile.seed = 17;
    auto trace = generate_normal(profile, 1);

    EventTemplate first;
    first.kind = EventKind::sensor_dropout;
    first.onset = 100;
    first.duration = 50;
    first.sensors = {"T6"};
    std::vector<InjectionRecord> records;
    records.push_back(inject_event(trace, first, records));

    // Same span, different sensor: fine.
    EventTemplate second = first;
    second.sensors = {"T7"};
    records.push_back(inject_event(trace, second, records));

    // Overlapping span on an already-touched sensor: rejected.
    EventTemplate clash = first;
    clash.onset = 140;
    CHECK_THROWS_AS((void)inject_event(trace, clash, records), std::invalid_argument);

    // A swarm touches every temperature sensor, so it clashes with either.
    EventTemplate swarm;
    swarm.onset = 120;
    swarm.duration = 30;
    CHECK_THROWS_AS((void)inject_event(trace, swarm, records), std::invalid_argument);

    swarm.onset = 400;
    records.push_back(inject_event(trace, swarm, records));
    auto labels = to_labeled_events(records);
    REQUIRE(labels.size() == 1);
    CHECK(labels[0].kind == Label::swarm);
    CHECK(labels[0].start == 400);
    CHECK(labels[0].end == 430);

    EventTemplate opened;
    opened.kind = EventKind::opened_hive;
    opened.onset = 600;
    opened.duration = 40;
    records.push_back(inject_event(trace, opened, records));
    labels = to_labeled_events(records);
    REQUIRE(labels.size() == 2);
    CHECK(labels[1].kind == Label::other_anomaly);
    CHECK(labels[1].start == 600);
    CHECK(labels[1].end == 640);
}

TEST_CASE("the canned benchmark scenario hits its window counts") {
    auto hives = make_benchmark(default_benchmark_scenario(51));
    REQUIRE(hives.size() == 2);
    const auto& north = hives[0];
    const auto& south = hives[1];
    REQUIRE(north.days.size() == 12);
    REQUIRE(south.days.size() == 3);

    std::vector<DayTag> all_days = north.days;
    all_days.insert(all_days.end(), south.days.begin(), south.days.end());
    SplitConfig config;
    config.training_source = "north";
    auto plan = build_split(all_days, config);
    CHECK(plan.training.size() == 7);
    CHECK(plan.validation.size() == 1);
    CHECK(plan.holdout.size() == 4);
    REQUIRE(plan.tests.size() == 1);
    CHECK(plan.tests[0].first == "south");
    CHECK(plan.tests[0].second.size() == 2);

    SUBCASE("swarm windows at the scoring stride: 24 holdout, 8 test") {
        auto holdout = materialize(north.trace, plan.holdout, north.events, {"T8"},
                                   60, 15);
        std::size_t holdout_swarms = 0;
        for (const auto& w : holdout.windows)
            holdout_swarms += w.label == Label::swarm;
        CHECK(holdout.windows.size() == 4 * 93);
        CHECK(holdout_swarms == 24);

        auto test = materialize(south.trace, plan.tests[0].second, south.events,
                                {"T8"}, 60, 15);
        std::size_t test_swarms = 0, test_other = 0;
        for (const auto& w : test.windows) {
            test_swarms += w.label == Label::swarm;
            test_other += w.label == Label::other_anomaly;
        }
        CHECK(test.windows.size() == 2 * 93);
        CHECK(test_swarms == 8);
        CHECK(test_other == 14); // opened hive and treatment coverage
    }
    SUBCASE("the dropout day costs training windows but stays normal") {
        CHECK_FALSE(north.days[3].anomalous);
        auto training = materialize(north.trace, plan.training, north.events, {"T8"},
                                    60, 1);
        CHECK(training.excluded_missing == 89);
        for (const auto& w : training.windows) CHECK(w.label == Label::normal);
    }
    SUBCASE("byte-identical regeneration") {
        // Bitwise equality: the dropout span holds NaN, which == cannot see.
        auto same = [](const std::vector<std::vector<double>>& a,
                       const std::vector<std::vector<double>>& b) {
            if (a.size() != b.size()) return false;
            for (std::size_t s = 0; s < a.size(); ++s) {
                if (a[s].size() != b[s].size()) return false;
                if (std::memcmp(a[s].data(), b[s].data(),
                                a[s].size() * sizeof(double)) != 0)
                    return false;
            }
            return true;
        };
        auto again = make_benchmark(default_benchmark_scenario(51));
        CHECK(same(again[0].trace.values, north.trace.values));
        CHECK(same(again[1].trace.values, south.trace.values));
        CHECK(again[0].injections.size() == north.injections.size());
        auto different = make_benchmark(default_benchmark_scenario(52));
        CHECK_FALSE(same(different[0].trace.values, north.trace.values));
    }
    SUBCASE("an event-free scenario leaves the split without a holdout") {
        std::vector<HiveScenario> quiet(1);
        quiet[0].profile.name = "quiet";
        quiet[0].days.resize(2);
        auto generated = make_benchmark(quiet);
        SplitConfig qc;
        qc.training_source = "quiet";
        CHECK_THROWS_AS((void)build_split(generated[0].days, qc),
                        std::invalid_argument);
    }
}
