#include "hive/tuner.hpp"

#include "hive/parallel.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace hive {

ParamDistribution ParamDistribution::uniform(double upper) {
    if (!std::isfinite(upper) || upper <= 0.0)
        throw std::invalid_argument("ParamDistribution: uniform upper bound must be positive");
    ParamDistribution d;
    d.kind_ = Kind::uniform;
    d.hi_ = upper;
    return d;
}

ParamDistribution ParamDistribution::integers(std::int64_t lo, std::int64_t hi) {
    if (lo > hi)
        throw std::invalid_argument("ParamDistribution: integer bounds out of order");
    ParamDistribution d;
    d.kind_ = Kind::integers;
    d.ilo_ = lo;
    d.ihi_ = hi;
    return d;
}

ParamDistribution ParamDistribution::log_uniform(double lo, double hi) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || lo <= 0.0 || lo > hi)
        throw std::invalid_argument("ParamDistribution: log-uniform needs 0 < lo <= hi");
    ParamDistribution d;
    d.kind_ = Kind::log_uniform;
    d.lo_ = lo;
    d.hi_ = hi;
    return d;
}

ParamDistribution ParamDistribution::categorical(std::vector<std::string> tags) {
    if (tags.empty())
        throw std::invalid_argument("ParamDistribution: empty tag set");
    ParamDistribution d;
    d.kind_ = Kind::categorical;
    d.tags_ = std::move(tags);
    return d;
}

ParamValue ParamDistribution::draw(Rng& rng) const {
    switch (kind_) {
    case Kind::uniform: return rng.uniform(0.0, hi_);
    case Kind::integers: return rng.uniform_int(ilo_, ihi_);
    case Kind::log_uniform: return rng.log_uniform(lo_, hi_);
    case Kind::categorical:
        return tags_[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(tags_.size()) - 1))];
    }
    throw std::logic_error("ParamDistribution: unreachable");
}

bool ParamDistribution::contains(const ParamValue& value) const {
    switch (kind_) {
    case Kind::uniform: {
        const double* v = std::get_if<double>(&value);
        return v && *v >= 0.0 && *v < hi_;
    }
    case Kind::integers: {
        const std::int64_t* v = std::get_if<std::int64_t>(&value);
        return v && *v >= ilo_ && *v <= ihi_;
    }
    case Kind::log_uniform: {
        const double* v = std::get_if<double>(&value);
        return v && *v >= lo_ && *v <= hi_;
    }
    case Kind::categorical: {
        const std::string* v = std::get_if<std::string>(&value);
        if (!v) return false;
        for (const auto& tag : tags_)
            if (tag == *v) return true;
        return false;
    }
    }
    return false;
}

std::string to_string(const ParamValue& value) {
    if (const auto* i = std::get_if<std::int64_t>(&value)) return std::to_string(*i);
    if (const auto* s = std::get_if<std::string>(&value)) return *s;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", std::get<double>(value));
    return buf;
}

SearchSpace default_search_space(DetectorKind kind) {
    SearchSpace space;
    space.detector = to_string(kind);
    auto add = [&](const char* name, ParamDistribution d) {
        space.params.emplace_back(name, std::move(d));
    };
    switch (kind) {
    case DetectorKind::lof:
        add("n_neighbors", ParamDistribution::integers(1, 100));
        add("algorithm", ParamDistribution::categorical({"ball_tree", "kd_tree"}));
        add("leaf_size", ParamDistribution::integers(1, 150));
        add("contamination", ParamDistribution::uniform(0.5));
        add("metric", ParamDistribution::categorical(
                          {"chebyshev", "cityblock", "euclidean", "infinity", "l1",
                           "l2", "manhattan", "minkowski"}));
        break;
    case DetectorKind::envelope:
        add("assume_centered", ParamDistribution::categorical({"true", "false"}));
        add("support_fraction", ParamDistribution::uniform(1.0));
        add("contamination", ParamDistribution::uniform(0.5));
        break;
    case DetectorKind::iforest:
        add("n_estimators", ParamDistribution::integers(10, 100));
        add("max_samples", ParamDistribution::categorical({"auto"}));
        add("contamination", ParamDistribution::uniform(0.5));
        add("max_features", ParamDistribution::uniform(1.0));
        add("bootstrap", ParamDistribution::categorical({"true", "false"}));
        break;
    case DetectorKind::ocsvm:
        add("kernel",
            ParamDistribution::categorical({"linear", "poly", "rbf", "sigmoid"}));
        add("shrinking", ParamDistribution::categorical({"true", "false"}));
        add("gamma", ParamDistribution::log_uniform(0.0001, 1.0));
        add("nu", ParamDistribution::log_uniform(0.0001, 1.0));
        break;
    case DetectorKind::autoencoder:
        add("hidden_size", ParamDistribution::integers(2, 64));
        add("layers", ParamDistribution::integers(1, 4));
        break;
    case DetectorKind::rba:
        break; // rule thresholds are fixed by the domain, nothing to search
    }
    return space;
}

ParamAssignment sample(const SearchSpace& space, Rng& rng) {
    ParamAssignment out;
    out.reserve(space.params.size());
    for (const auto& [name, dist] : space.params) out.emplace_back(name, dist.draw(rng));
    return out;
}

namespace {

// Rank used for the argmax: real objectives keep their F1, NA sinks below
// every real score, failures below NA.
double rank_of(const TrialResult& t) {
    if (t.failed) return -2.0;
    if (!t.scores.has_f1) return -1.0;
    return t.scores.f1;
}

TrialResult run_trial(const SearchSpace& space, std::uint64_t seed, std::size_t i,
                      const TrialFn& trial) {
    TrialResult result;
    result.index = i;
    Rng rng(derive_seed(seed, "trial", i));
    result.params = sample(space, rng);
    result.seed = derive_seed(seed, "trial-fit", i);
    const auto start = std::chrono::steady_clock::now();
    try {
        result.counts = trial(i, result.params, result.seed);
        result.scores = metrics(result.counts);
    } catch (const std::exception& e) {
        result.failed = true;
        result.error = e.what();
    }
    result.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

} // namespace

SearchResult random_search(const SearchSpace& space, std::size_t n_trials,
                           std::uint64_t seed, const TrialFn& trial) {
    if (n_trials == 0) throw std::invalid_argument("random_search: zero trials");
    if (!trial) throw std::invalid_argument("random_search: no trial function");

    SearchResult result;
    result.trials.resize(n_trials);
    const int threads = par::threads();
    if (threads == 1) {
        for (std::size_t i = 0; i < n_trials; ++i)
            result.trials[i] = run_trial(space, seed, i, trial);
    } else {
#pragma omp parallel for schedule(dynamic) num_threads(threads)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n_trials); ++i)
            result.trials[static_cast<std::size_t>(i)] =
                run_trial(space, seed, static_cast<std::size_t>(i), trial);
    }

    result.best = 0;
    for (std::size_t i = 1; i < n_trials; ++i)
        if (rank_of(result.trials[i]) > rank_of(result.trials[result.best]))
            result.best = i;
    return result;
}

std::string render_trial_log(const SearchResult& result) {
    std::string out = "trial\tparameters\ttp\tfp\ttn\tfn\tf1\tstatus\n";
    for (const auto& t : result.trials) {
        out += std::to_string(t.index);
        out += '\t';
        for (std::size_t i = 0; i < t.params.size(); ++i) {
            if (i) out += ';';
            out += t.params[i].first;
            out += '=';
            out += to_string(t.params[i].second);
        }
        if (t.params.empty()) out += '-';
        out += '\t';
        out += std::to_string(t.counts.tp);
        out += '\t';
        out += std::to_string(t.counts.fp);
        out += '\t';
        out += std::to_string(t.counts.tn);
        out += '\t';
        out += std::to_string(t.counts.fn);
        out += '\t';
        if (t.failed)
            out += "-";
        else if (!t.scores.has_f1)
            out += "NA";
        else {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17g", t.scores.f1);
            out += buf;
        }
        out += '\t';
        if (t.failed) {
            out += "failed: ";
            out += t.error;
        } else {
            out += t.index == result.best ? "best" : "ok";
        }
        out += '\n';
    }
    return out;
}

} // namespace hive
