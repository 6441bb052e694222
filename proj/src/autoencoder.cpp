#include "hive/autoencoder.hpp"

#include "hive/parallel.hpp"
#include "hive/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace hive {

namespace {

using Eigen::MatrixXd;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct TensorRef {
    std::size_t offset, rows, cols;
    std::size_t size() const { return rows * cols; }
};

// One gated cell: three input maps W (hid x in), three recurrent maps
// U (hid x hid), three biases.
struct CellLayout {
    std::size_t in, hid;
    TensorRef wz, wr, wn, uz, ur, un, bz, br, bn;
};

struct Layout {
    std::vector<CellLayout> encoder, decoder;
    TensorRef wo, bo; // linear readout (S x hid) from the decoder state
    std::size_t total = 0;
};

Layout make_layout(const AeConfig& c) {
    Layout layout;
    std::size_t offset = 0;
    auto tensor = [&](std::size_t rows, std::size_t cols) {
        TensorRef t{offset, rows, cols};
        offset += rows * cols;
        return t;
    };
    auto cell = [&](std::size_t in) {
        CellLayout cl;
        cl.in = in;
        cl.hid = c.hidden_size;
        cl.wz = tensor(cl.hid, in);
        cl.wr = tensor(cl.hid, in);
        cl.wn = tensor(cl.hid, in);
        cl.uz = tensor(cl.hid, cl.hid);
        cl.ur = tensor(cl.hid, cl.hid);
        cl.un = tensor(cl.hid, cl.hid);
        cl.bz = tensor(cl.hid, 1);
        cl.br = tensor(cl.hid, 1);
        cl.bn = tensor(cl.hid, 1);
        return cl;
    };
    for (std::size_t l = 0; l < c.layers; ++l)
        layout.encoder.push_back(cell(l == 0 ? c.sensors : c.hidden_size));
    // The decoder's bottom layer consumes the code, so every input is
    // hidden-sized.
    for (std::size_t l = 0; l < c.layers; ++l) layout.decoder.push_back(cell(c.hidden_size));
    layout.wo = tensor(c.sensors, c.hidden_size);
    layout.bo = tensor(c.sensors, 1);
    layout.total = offset;
    return layout;
}

Eigen::Map<const RowMat> cmat(const double* base, const TensorRef& t) {
    return {base + t.offset, static_cast<Eigen::Index>(t.rows),
            static_cast<Eigen::Index>(t.cols)};
}
Eigen::Map<RowMat> mmat(double* base, const TensorRef& t) {
    return {base + t.offset, static_cast<Eigen::Index>(t.rows),
            static_cast<Eigen::Index>(t.cols)};
}
Eigen::Map<const Eigen::VectorXd> cvec(const double* base, const TensorRef& t) {
    return {base + t.offset, static_cast<Eigen::Index>(t.size())};
}
Eigen::Map<Eigen::VectorXd> mvec(double* base, const TensorRef& t) {
    return {base + t.offset, static_cast<Eigen::Index>(t.size())};
}

MatrixXd logistic(MatrixXd a) {
    return (1.0 / (1.0 + (-a.array()).exp())).matrix();
}

// Activations of one layer across the whole sequence: gates z and r,
// candidate n, the recurrent candidate product m = h_prev U_n', and the
// state h after each step.
struct LayerTrace {
    std::vector<MatrixXd> z, r, n, m, h;
};

// The input sequence of a layer: either a real per-step sequence or one
// constant matrix (the code feeding every decoder step).
struct InputSeq {
    const std::vector<MatrixXd>* seq = nullptr;
    const MatrixXd* constant = nullptr;
    const MatrixXd& at(std::size_t t) const { return seq ? (*seq)[t] : *constant; }
};

LayerTrace forward_layer(const CellLayout& cl, const double* params, const InputSeq& input,
                         std::size_t steps, Eigen::Index batch) {
    const auto wz = cmat(params, cl.wz), wr = cmat(params, cl.wr), wn = cmat(params, cl.wn);
    const auto uz = cmat(params, cl.uz), ur = cmat(params, cl.ur), un = cmat(params, cl.un);
    const auto bz = cvec(params, cl.bz), br = cvec(params, cl.br), bn = cvec(params, cl.bn);

    LayerTrace trace;
    trace.z.reserve(steps);
    trace.r.reserve(steps);
    trace.n.reserve(steps);
    trace.m.reserve(steps);
    trace.h.reserve(steps);
    MatrixXd h = MatrixXd::Zero(batch, static_cast<Eigen::Index>(cl.hid));
    for (std::size_t t = 0; t < steps; ++t) {
        const MatrixXd& u = input.at(t);
        MatrixXd az = u * wz.transpose() + h * uz.transpose();
        az.rowwise() += bz.transpose();
        MatrixXd ar = u * wr.transpose() + h * ur.transpose();
        ar.rowwise() += br.transpose();
        MatrixXd z = logistic(std::move(az));
        MatrixXd r = logistic(std::move(ar));
        MatrixXd m = h * un.transpose();
        MatrixXd an = u * wn.transpose();
        an.rowwise() += bn.transpose();
        an.array() += r.array() * m.array();
        MatrixXd n = an.array().tanh().matrix();
        MatrixXd h_next =
            ((1.0 - z.array()) * n.array() + z.array() * h.array()).matrix();
        trace.z.push_back(std::move(z));
        trace.r.push_back(std::move(r));
        trace.n.push_back(std::move(n));
        trace.m.push_back(std::move(m));
        trace.h.push_back(std::move(h_next));
        h = trace.h.back();
    }
    return trace;
}

// Reverse sweep over one layer. dh_above[t] carries the loss gradient into
// h[t] from whatever consumed it; returns the gradient into the layer's
// inputs and accumulates parameter gradients into `grad`.
std::vector<MatrixXd> backward_layer(const CellLayout& cl, const double* params,
                                     double* grad, const LayerTrace& trace,
                                     const InputSeq& input,
                                     const std::vector<MatrixXd>& dh_above) {
    const auto wz = cmat(params, cl.wz), wr = cmat(params, cl.wr), wn = cmat(params, cl.wn);
    const auto uz = cmat(params, cl.uz), ur = cmat(params, cl.ur), un = cmat(params, cl.un);
    auto gwz = mmat(grad, cl.wz), gwr = mmat(grad, cl.wr), gwn = mmat(grad, cl.wn);
    auto guz = mmat(grad, cl.uz), gur = mmat(grad, cl.ur), gun = mmat(grad, cl.un);
    auto gbz = mvec(grad, cl.bz), gbr = mvec(grad, cl.br), gbn = mvec(grad, cl.bn);

    const std::size_t steps = trace.h.size();
    const auto batch = trace.h.front().rows();
    const auto hid = static_cast<Eigen::Index>(cl.hid);
    const MatrixXd h0 = MatrixXd::Zero(batch, hid);

    std::vector<MatrixXd> dinput(steps);
    MatrixXd carry = MatrixXd::Zero(batch, hid);
    for (std::size_t t = steps; t-- > 0;) {
        const MatrixXd& hprev = t == 0 ? h0 : trace.h[t - 1];
        const MatrixXd& z = trace.z[t];
        const MatrixXd& r = trace.r[t];
        const MatrixXd& n = trace.n[t];
        const MatrixXd& m = trace.m[t];
        const MatrixXd dh = dh_above[t] + carry;

        MatrixXd dn = (dh.array() * (1.0 - z.array())).matrix();
        MatrixXd dz = (dh.array() * (hprev.array() - n.array())).matrix();
        MatrixXd dan = (dn.array() * (1.0 - n.array().square())).matrix();
        MatrixXd dr = (dan.array() * m.array()).matrix();
        MatrixXd dar = (dr.array() * r.array() * (1.0 - r.array())).matrix();
        MatrixXd daz = (dz.array() * z.array() * (1.0 - z.array())).matrix();
        MatrixXd dm = (dan.array() * r.array()).matrix();

        const MatrixXd& u = input.at(t);
        gwz.noalias() += daz.transpose() * u;
        gwr.noalias() += dar.transpose() * u;
        gwn.noalias() += dan.transpose() * u;
        guz.noalias() += daz.transpose() * hprev;
        gur.noalias() += dar.transpose() * hprev;
        gun.noalias() += dm.transpose() * hprev;
        gbz += daz.colwise().sum().transpose();
        gbr += dar.colwise().sum().transpose();
        gbn += dan.colwise().sum().transpose();

        dinput[t] = daz * wz + dar * wr + dan * wn;
        carry = (dh.array() * z.array()).matrix();
        carry.noalias() += daz * uz;
        carry.noalias() += dar * ur;
        carry.noalias() += dm * un;
    }
    return dinput;
}

struct ForwardPass {
    std::vector<MatrixXd> x;              // inputs per step, batch x S
    std::vector<LayerTrace> encoder;      // per layer
    std::vector<LayerTrace> decoder;      // per layer
    MatrixXd code;                        // batch x hid
    std::vector<MatrixXd> y;              // reconstructions per step
    double loss = 0.0;
};

ForwardPass forward(const AeConfig& config, const Layout& layout, const double* params,
                    const std::vector<std::vector<double>>& windows,
                    const std::size_t* index, std::size_t batch) {
    const auto b = static_cast<Eigen::Index>(batch);
    const auto s = static_cast<Eigen::Index>(config.sensors);
    const std::size_t steps = config.window_length;

    ForwardPass pass;
    pass.x.assign(steps, MatrixXd(b, s));
    for (std::size_t i = 0; i < batch; ++i) {
        const auto& w = windows[index[i]];
        for (std::size_t t = 0; t < steps; ++t)
            for (std::size_t j = 0; j < config.sensors; ++j)
                pass.x[t](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    w[t * config.sensors + j];
    }

    // Later layers keep pointers at earlier traces; no reallocation allowed.
    pass.encoder.reserve(layout.encoder.size());
    pass.decoder.reserve(layout.decoder.size());

    const std::vector<MatrixXd>* below = &pass.x;
    for (const auto& cl : layout.encoder) {
        pass.encoder.push_back(forward_layer(cl, params, {below, nullptr}, steps, b));
        below = &pass.encoder.back().h;
    }
    pass.code = pass.encoder.back().h.back();

    const MatrixXd* code = &pass.code;
    InputSeq input{nullptr, code};
    for (const auto& cl : layout.decoder) {
        pass.decoder.push_back(forward_layer(cl, params, input, steps, b));
        input = {&pass.decoder.back().h, nullptr};
    }

    const auto wo = cmat(params, layout.wo);
    const auto bo = cvec(params, layout.bo);
    pass.y.resize(steps);
    double sse = 0.0;
    for (std::size_t t = 0; t < steps; ++t) {
        pass.y[t] = pass.decoder.back().h[t] * wo.transpose();
        pass.y[t].rowwise() += bo.transpose();
        sse += (pass.y[t] - pass.x[t]).squaredNorm();
    }
    pass.loss = sse / (static_cast<double>(batch) * static_cast<double>(steps) *
                       static_cast<double>(config.sensors));
    return pass;
}

std::vector<double> backward(const AeConfig& config, const Layout& layout,
                             const double* params, const ForwardPass& pass) {
    const std::size_t steps = config.window_length;
    const auto batch = pass.code.rows();
    const auto hid = static_cast<Eigen::Index>(config.hidden_size);
    const double scale = 2.0 / (static_cast<double>(batch) * static_cast<double>(steps) *
                                static_cast<double>(config.sensors));

    std::vector<double> grad(layout.total, 0.0);
    const auto wo = cmat(params, layout.wo);
    auto gwo = mmat(grad.data(), layout.wo);
    auto gbo = mvec(grad.data(), layout.bo);

    // Readout layer.
    std::vector<MatrixXd> dh(steps);
    for (std::size_t t = 0; t < steps; ++t) {
        MatrixXd dy = scale * (pass.y[t] - pass.x[t]);
        gwo.noalias() += dy.transpose() * pass.decoder.back().h[t];
        gbo += dy.colwise().sum().transpose();
        dh[t] = dy * wo;
    }

    // Decoder stack, top to bottom; the bottom layer's input gradients sum
    // into the code.
    for (std::size_t l = layout.decoder.size(); l-- > 0;) {
        const InputSeq in = l == 0 ? InputSeq{nullptr, &pass.code}
                                   : InputSeq{&pass.decoder[l - 1].h, nullptr};
        dh = backward_layer(layout.decoder[l], params, grad.data(), pass.decoder[l], in,
                            dh);
    }
    MatrixXd dcode = MatrixXd::Zero(batch, hid);
    for (const auto& d : dh) dcode += d;

    // Encoder stack: the code is the top layer's final state.
    std::vector<MatrixXd> dh_enc(steps, MatrixXd::Zero(batch, hid));
    dh_enc[steps - 1] = dcode;
    for (std::size_t l = layout.encoder.size(); l-- > 0;) {
        const InputSeq in = l == 0 ? InputSeq{&pass.x, nullptr}
                                   : InputSeq{&pass.encoder[l - 1].h, nullptr};
        dh_enc = backward_layer(layout.encoder[l], params, grad.data(), pass.encoder[l],
                                in, dh_enc);
    }
    return grad;
}

void validate_config(const AeConfig& c) {
    if (c.hidden_size < 2) throw std::invalid_argument("autoencoder: hidden_size must be >= 2");
    if (c.layers < 1) throw std::invalid_argument("autoencoder: layers must be >= 1");
    if (c.sensors == 0 || c.window_length == 0)
        throw std::invalid_argument("autoencoder: sensors and window_length must be set");
    if (!(c.learning_rate > 0.0))
        throw std::invalid_argument("autoencoder: learning rate must be positive");
    if (c.batch_size == 0) throw std::invalid_argument("autoencoder: batch_size must be >= 1");
    if (c.max_epochs < 1) throw std::invalid_argument("autoencoder: max_epochs must be >= 1");
    if (c.patience < 1) throw std::invalid_argument("autoencoder: patience must be >= 1");
}

void validate_windows(const AeConfig& c, const std::vector<std::vector<double>>& windows,
                      const char* what) {
    if (windows.empty())
        throw std::invalid_argument(std::string("autoencoder: empty ") + what + " set");
    for (const auto& w : windows)
        if (w.size() != c.window_length * c.sensors)
            throw std::invalid_argument(std::string("autoencoder: misshaped ") + what +
                                        " window");
}

// Mean loss over a window set, evaluated in bounded chunks.
double chunked_loss(const AeConfig& config, const Layout& layout, const double* params,
                    const std::vector<std::vector<double>>& windows) {
    constexpr std::size_t chunk = 256;
    std::vector<std::size_t> index(windows.size());
    std::iota(index.begin(), index.end(), 0);
    double sum = 0.0;
    for (std::size_t start = 0; start < windows.size(); start += chunk) {
        const std::size_t size = std::min(chunk, windows.size() - start);
        sum += forward(config, layout, params, windows, index.data() + start, size).loss *
               static_cast<double>(size);
    }
    return sum / static_cast<double>(windows.size());
}

} // namespace

AeModel AeModel::create(const AeConfig& config) {
    validate_config(config);
    const Layout layout = make_layout(config);
    AeModel model;
    model.config_ = config;
    model.params_.assign(layout.total, 0.0);

    // Uniform +-1/sqrt(fan-in) per tensor, drawn in layout order.
    Rng rng(derive_seed(config.seed, "ae-init"));
    auto fill = [&](const TensorRef& t, std::size_t fan) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan));
        for (std::size_t i = 0; i < t.size(); ++i)
            model.params_[t.offset + i] = rng.uniform(-bound, bound);
    };
    auto fill_cell = [&](const CellLayout& cl) {
        fill(cl.wz, cl.in);
        fill(cl.wr, cl.in);
        fill(cl.wn, cl.in);
        fill(cl.uz, cl.hid);
        fill(cl.ur, cl.hid);
        fill(cl.un, cl.hid);
        fill(cl.bz, cl.hid);
        fill(cl.br, cl.hid);
        fill(cl.bn, cl.hid);
    };
    for (const auto& cl : layout.encoder) fill_cell(cl);
    for (const auto& cl : layout.decoder) fill_cell(cl);
    fill(layout.wo, config.hidden_size);
    fill(layout.bo, config.hidden_size);
    return model;
}

AeModel AeModel::restore(const AeConfig& config, std::vector<double> params) {
    validate_config(config);
    const Layout layout = make_layout(config);
    if (params.size() != layout.total)
        throw std::invalid_argument("autoencoder: parameter count mismatch");
    AeModel model;
    model.config_ = config;
    model.params_ = std::move(params);
    return model;
}

void AeModel::set_parameters(std::vector<double> params) {
    if (params.size() != params_.size())
        throw std::invalid_argument("autoencoder: parameter count mismatch");
    params_ = std::move(params);
}

AeModel AeModel::train(const std::vector<std::vector<double>>& training,
                       const std::vector<std::vector<double>>& validation,
                       const AeConfig& config) {
    validate_config(config);
    validate_windows(config, training, "training");
    validate_windows(config, validation, "validation");

    AeModel model = create(config);
    const Layout layout = make_layout(config);
    const std::size_t n = training.size();

    std::vector<double> m(layout.total, 0.0), v(layout.total, 0.0);
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    double beta1_t = 1.0, beta2_t = 1.0;

    std::vector<double> best_params = model.params_;
    double best_val = std::numeric_limits<double>::infinity();
    int stale = 0;

    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(config.seed, "ae-shuffle",
                                    static_cast<std::uint64_t>(epoch)));
        auto order = shuffle_rng.sample_without_replacement(n, n);

        double train_sum = 0.0;
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t size = std::min(config.batch_size, n - start);
            auto pass = forward(config, layout, model.params_.data(), training,
                                order.data() + start, size);
            if (!std::isfinite(pass.loss))
                throw std::runtime_error("autoencoder: training loss diverged");
            train_sum += pass.loss * static_cast<double>(size);
            auto grad = backward(config, layout, model.params_.data(), pass);

            beta1_t *= beta1;
            beta2_t *= beta2;
            for (std::size_t i = 0; i < layout.total; ++i) {
                m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
                const double m_hat = m[i] / (1.0 - beta1_t);
                const double v_hat = v[i] / (1.0 - beta2_t);
                model.params_[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + eps);
            }
        }

        const double val =
            chunked_loss(config, layout, model.params_.data(), validation);
        if (!std::isfinite(val))
            throw std::runtime_error("autoencoder: validation loss diverged");
        model.history_.push_back({train_sum / static_cast<double>(n), val});

        if (val < best_val) {
            best_val = val;
            best_params = model.params_;
            model.best_epoch_ = static_cast<std::size_t>(epoch);
            stale = 0;
        } else if (++stale >= config.patience) {
            break;
        }
    }
    model.params_ = std::move(best_params);
    return model;
}

std::vector<double> AeModel::reconstruct(std::span<const double> window) const {
    if (window.size() != config_.window_length * config_.sensors)
        throw std::invalid_argument("autoencoder: window shape mismatch");
    const Layout layout = make_layout(config_);
    std::vector<std::vector<double>> one{{window.begin(), window.end()}};
    const std::size_t index = 0;
    auto pass = forward(config_, layout, params_.data(), one, &index, 1);
    std::vector<double> out(window.size());
    for (std::size_t t = 0; t < config_.window_length; ++t)
        for (std::size_t j = 0; j < config_.sensors; ++j)
            out[t * config_.sensors + j] =
                pass.y[t](0, static_cast<Eigen::Index>(j));
    return out;
}

double AeModel::loss(std::span<const double> window) const {
    if (window.size() != config_.window_length * config_.sensors)
        throw std::invalid_argument("autoencoder: window shape mismatch");
    const Layout layout = make_layout(config_);
    std::vector<std::vector<double>> one{{window.begin(), window.end()}};
    const std::size_t index = 0;
    return forward(config_, layout, params_.data(), one, &index, 1).loss;
}

std::vector<double> AeModel::loss_batch(
    const std::vector<std::vector<double>>& windows) const {
    std::vector<double> out(windows.size());
    const int threads = par::threads();
    if (threads == 1 || windows.size() < 2) {
        for (std::size_t i = 0; i < windows.size(); ++i) out[i] = loss(windows[i]);
        return out;
    }
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(windows.size()); ++i)
        out[static_cast<std::size_t>(i)] = loss(windows[static_cast<std::size_t>(i)]);
    return out;
}

double AeModel::batch_loss(const std::vector<std::vector<double>>& windows) const {
    validate_windows(config_, windows, "loss");
    return chunked_loss(config_, make_layout(config_), params_.data(), windows);
}

std::vector<double> AeModel::gradient(
    const std::vector<std::vector<double>>& windows) const {
    validate_windows(config_, windows, "gradient");
    const Layout layout = make_layout(config_);
    std::vector<std::size_t> index(windows.size());
    std::iota(index.begin(), index.end(), 0);
    auto pass =
        forward(config_, layout, params_.data(), windows, index.data(), index.size());
    return backward(config_, layout, params_.data(), pass);
}

AlphaChoice AeModel::choose_alpha(std::span<const double> losses,
                                  const std::vector<bool>& positives) {
    if (losses.empty() || losses.size() != positives.size())
        throw std::invalid_argument("autoencoder: loss/label size mismatch");
    const auto total_pos =
        static_cast<double>(std::count(positives.begin(), positives.end(), true));
    if (total_pos == 0.0)
        throw std::invalid_argument("autoencoder: no positive labels to calibrate on");

    // Sweep thresholds from the largest observed loss down; the flagged set
    // only grows, so the first maximum is the largest-alpha maximum.
    std::vector<std::size_t> order(losses.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return losses[a] > losses[b]; });

    double tp = 0.0, fp = 0.0;
    double best_f1 = -1.0, best_alpha = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double value = losses[order[i]];
        for (; i < order.size() && losses[order[i]] == value; ++i)
            (positives[order[i]] ? tp : fp) += 1.0;
        const double precision = tp + fp > 0.0 ? tp / (tp + fp) : 0.0;
        const double recall = tp / total_pos;
        const double f1 = precision + recall > 0.0
                              ? 2.0 * precision * recall / (precision + recall)
                              : 0.0;
        if (f1 > best_f1) {
            best_f1 = f1;
            best_alpha = value;
        }
    }

    const double lo = losses[order.back()], hi = losses[order.front()];
    if (lo == hi) {
        // No spread to threshold on: report the one achievable score but
        // return an alpha that flags nothing.
        return {std::nextafter(hi, std::numeric_limits<double>::infinity()), best_f1,
                true};
    }
    return {best_alpha, best_f1, false};
}

double AeModel::calibrate_alpha(const std::vector<std::vector<double>>& windows,
                                const std::vector<Label>& labels) {
    if (windows.size() != labels.size())
        throw std::invalid_argument("autoencoder: window/label count mismatch");
    auto losses = loss_batch(windows);
    std::vector<bool> positives(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
        positives[i] = labels[i] == Label::swarm;
    auto choice = choose_alpha(losses, positives);
    alpha_ = choice.alpha;
    degenerate_ = choice.degenerate;
    calibrated_ = true;
    return alpha_;
}

double AeModel::alpha() const {
    if (!calibrated_) throw std::logic_error("autoencoder: alpha not calibrated");
    return alpha_;
}

void AeModel::set_alpha(double alpha, bool degenerate) {
    if (!(alpha > 0.0)) throw std::invalid_argument("autoencoder: alpha must be positive");
    alpha_ = alpha;
    degenerate_ = degenerate;
    calibrated_ = true;
}

Verdict AeModel::classify(std::span<const double> window) const {
    if (!calibrated_) throw std::logic_error("autoencoder: alpha not calibrated");
    return loss(window) >= alpha_ ? Verdict::anomalous : Verdict::nominal;
}

} // namespace hive
