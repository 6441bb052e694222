#pragma once

#include "hive/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace hive {

enum class KernelKind { linear, poly, rbf, sigmoid };

std::string to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& name);

struct KernelSpec {
    KernelKind kind = KernelKind::rbf;
    double gamma = 0.5; // width; must be positive
    int degree = 3;     // poly only
    double coef0 = 0.0; // poly and sigmoid; inert for rbf and linear
};

// K(x, y) under the spec. Throws on mismatched lengths or invalid parameters.
double kernel_value(const KernelSpec& kernel, std::span<const double> x,
                    std::span<const double> y);

struct OcsvmParams {
    KernelSpec kernel;
    double nu = 0.5; // in (0, 1]: bounds the outlier fraction from above and
                     // the support-vector fraction from below
    bool shrinking = true;
    double tolerance = 1e-4;       // KKT violation declaring convergence
    std::uint64_t seed = 0;        // accepted for interface parity; the solver
                                   // is deterministic and never draws from it
    std::size_t max_iterations = 1000000;
    std::size_t cache_rows = 0; // Gram rows held when n > 4096; 0 picks a
                                // default. Cache size never changes results.
};

// One-class support vector machine: a kernel envelope around the training
// data. Solves the dual
//   min 1/2 a' Q a   s.t.  0 <= a_i <= 1/(nu n),  sum a = 1,  Q_ij = K(x_i, x_j)
// by two-coordinate descent on the maximally violating pair. The decision
// value sum_i a_i K(sv_i, x) - rho is negative for anomalies.
class OcsvmModel {
public:
    // Throws std::invalid_argument on parameter or shape errors and
    // std::runtime_error when the solver hits max_iterations unconverged.
    static OcsvmModel fit(const std::vector<std::vector<double>>& points,
                          const OcsvmParams& params);

    double decision(std::span<const double> x) const;
    std::vector<double> decision_batch(const std::vector<std::vector<double>>& queries) const;
    Verdict classify(std::span<const double> x) const; // anomaly <=> decision < 0

    // Training points with positive dual coefficient, in training order.
    const std::vector<std::vector<double>>& support_vectors() const { return svs_; }
    const std::vector<double>& dual_coefficients() const { return coefs_; }
    double rho() const { return rho_; }
    std::size_t dimensions() const { return dims_; }
    std::size_t iterations() const { return iterations_; }
    const OcsvmParams& params() const { return params_; }

    static OcsvmModel restore(std::vector<std::vector<double>> support_vectors,
                              std::vector<double> coefficients, double rho,
                              const OcsvmParams& params);

private:
    OcsvmParams params_;
    std::vector<std::vector<double>> svs_;
    std::vector<double> coefs_;
    double rho_ = 0.0;
    std::size_t dims_ = 0;
    std::size_t iterations_ = 0;
};

} // namespace hive
