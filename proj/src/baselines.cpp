#include "gar/baselines.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <fstream>

#include "gar/rng.hpp"

#include "json.hpp"

namespace gar {

// --- Direct linear VaR/ES model -------------------------------------------

RiskEstimate DirectLinearModel::predict(const Tensor& context, int k) const {
    const std::size_t D = static_cast<std::size_t>(n_assets * cond_len);
    if (context.numel() != D)
        throw std::invalid_argument("DirectLinearModel: context has " +
                                    std::to_string(context.numel()) + " entries, expected " +
                                    std::to_string(D));
    if (k < 0 || k >= n_policies) throw std::out_of_range("DirectLinearModel: policy index");
    RiskEstimate est;
    est.v = b_var.data[static_cast<std::size_t>(k)];
    double e = b_es.data[static_cast<std::size_t>(k)];
    for (std::size_t d = 0; d < D; ++d) {
        est.v += context.data[d] * W_var.at(d, static_cast<std::size_t>(k));
        e += context.data[d] * W_es.at(d, static_cast<std::size_t>(k));
    }
    est.e = e;
    return est;
}

DirectLinearModel fit_direct_linear(const WindowDataset& dataset,
                                    const std::vector<PolicyParams>& policies,
                                    const DirectLinearFitConfig& cfg) {
    auto train = dataset.of(Split::train);
    if (train.empty()) throw std::runtime_error("fit_direct_linear: empty training split");
    if (policies.empty()) throw std::invalid_argument("fit_direct_linear: no policies");
    const int M = static_cast<int>(dataset.assets.size());
    const int Tc = dataset.cond_len;
    const int K = static_cast<int>(policies.size());
    const std::size_t D = static_cast<std::size_t>(M * Tc);

    // Realized outcomes per (sample, policy).
    std::vector<std::vector<double>> ell(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k)
        for (const auto* w : train)
            ell[static_cast<std::size_t>(k)].push_back(
                policy_functional(policies[static_cast<std::size_t>(k)], w->scenario));

    DirectLinearModel model;
    model.n_assets = M;
    model.cond_len = Tc;
    model.n_policies = K;
    model.W_var = Tensor::zeros(D, static_cast<std::size_t>(K));
    model.W_es = Tensor::zeros(D, static_cast<std::size_t>(K));
    model.b_var = Tensor::zeros(static_cast<std::size_t>(K));
    model.b_es = Tensor::zeros(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        // Warm start at the unconditional plug-in estimates.
        model.b_var.data[static_cast<std::size_t>(k)] =
            empirical_var(ell[static_cast<std::size_t>(k)], cfg.score.alpha);
        model.b_es.data[static_cast<std::size_t>(k)] =
            empirical_es(ell[static_cast<std::size_t>(k)], cfg.score.alpha);
    }

    ParamStore params;
    params.add("W_var", model.W_var);
    params.add("b_var", model.b_var);
    params.add("W_es", model.W_es);
    params.add("b_es", model.b_es);

    // One static full-batch graph, re-run per Adam iteration.
    Graph g;
    auto ids = params.bind(g, true);
    ScoreConfig smooth = cfg.score;
    smooth.smooth = true;
    NodeId vt = g.transpose(ids.at("W_var"));
    NodeId et = g.transpose(ids.at("W_es"));
    NodeId acc = -1;
    for (std::size_t i = 0; i < train.size(); ++i) {
        NodeId c = g.constant(Tensor::column(train[i]->context.data));
        NodeId v_all = g.add_col_broadcast(g.matmul(vt, c), ids.at("b_var"));
        NodeId e_all = g.add_col_broadcast(g.matmul(et, c), ids.at("b_es"));
        for (int k = 0; k < K; ++k) {
            NodeId s = joint_score_node(g, g.select(v_all, k), g.select(e_all, k),
                                        g.constant(ell[static_cast<std::size_t>(k)][i]),
                                        smooth);
            acc = acc < 0 ? s : g.add(acc, s);
        }
    }
    NodeId loss = g.scale(acc, 1.0 / static_cast<double>(train.size() * static_cast<std::size_t>(K)));

    TrainConfig adam_cfg;
    AdamBuffers buf;
    for (int it = 0; it < cfg.iterations; ++it) {
        for (auto& [name, t] : params) g.set_leaf(ids.at(name), t.data);
        g.forward();
        g.backward(loss);
        buf.t += 1;
        const double bc1 = 1.0 - std::pow(adam_cfg.adam_beta1, static_cast<double>(buf.t));
        const double bc2 = 1.0 - std::pow(adam_cfg.adam_beta2, static_cast<double>(buf.t));
        for (auto& [name, t] : params) {
            const auto& grad = g.grad(ids.at(name));
            auto& m = buf.m[name];
            auto& v = buf.v[name];
            if (m.empty()) m.assign(grad.size(), 0.0);
            if (v.empty()) v.assign(grad.size(), 0.0);
            for (std::size_t i = 0; i < grad.size(); ++i) {
                m[i] = adam_cfg.adam_beta1 * m[i] + (1.0 - adam_cfg.adam_beta1) * grad[i];
                v[i] = adam_cfg.adam_beta2 * v[i] +
                       (1.0 - adam_cfg.adam_beta2) * grad[i] * grad[i];
                t.data[i] -= cfg.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + 1e-8);
            }
        }
    }
    model.W_var = params.at("W_var");
    model.b_var = params.at("b_var");
    model.W_es = params.at("W_es");
    model.b_es = params.at("b_es");
    return model;
}

// --- Unconditional generator ----------------------------------------------

TrainState fit_unconditional(const WindowDataset& dataset, GeneratorSpec spec,
                             const TrainConfig& cfg) {
    spec.unconditional = true;
    return train(dataset, spec, cfg);
}

// --- GARCH(1,1) QMLE --------------------------------------------------------

void GarchParams::validate() const {
    const std::size_t M = omega.size();
    if (a.size() != M || b.size() != M) throw std::invalid_argument("GarchParams: ragged");
    for (std::size_t j = 0; j < M; ++j)
        if (!(omega[j] > 0.0 && a[j] >= 0.0 && b[j] >= 0.0 && a[j] + b[j] < 1.0))
            throw std::invalid_argument("GarchParams: asset " + std::to_string(j) +
                                        " violates stationarity");
    if (!(dcc_a >= 0.0 && dcc_b >= 0.0 && dcc_a + dcc_b < 1.0))
        throw std::invalid_argument("GarchParams: DCC parameters violate stationarity");
    if (qbar.rows() != M || qbar.cols() != M)
        throw std::invalid_argument("GarchParams: qbar shape mismatch");
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// (omega, a, b) from the unconstrained coordinates: omega = exp(u0),
// persistence p = sigma(u1), split q = sigma(u2), a = p*q, b = p*(1-q).
struct GarchTheta {
    double omega, a, b;
    double p, q;
    static GarchTheta from(const double u[3]) {
        GarchTheta t{};
        t.omega = std::exp(u[0]);
        t.p = sigmoid(u[1]);
        t.q = sigmoid(u[2]);
        t.a = t.p * t.q;
        t.b = t.p * (1.0 - t.q);
        return t;
    }
};

// Gaussian log-likelihood and its gradient in the unconstrained coordinates,
// via the standard derivative recursion of sigma^2_t.
double garch_loglik_grad(std::span<const double> r, const double u[3], double grad[3]) {
    const GarchTheta th = GarchTheta::from(u);
    const std::size_t n = r.size();
    double mean = 0.0;
    for (double x : r) mean += x;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double x : r) var += (x - mean) * (x - mean);
    var /= static_cast<double>(n);

    double s2 = var;
    double ds[3] = {0.0, 0.0, 0.0};  // d sigma^2_t / d(omega, a, b)
    double ll = 0.0;
    double gl[3] = {0.0, 0.0, 0.0};  // d ll / d(omega, a, b)
    const double log2pi = 1.8378770664093453;
    for (std::size_t t = 0; t < n; ++t) {
        if (t > 0) {
            const double r2 = r[t - 1] * r[t - 1];
            const double s2_prev = s2;
            double ds_new[3] = {1.0 + th.b * ds[0], r2 + th.b * ds[1],
                                s2_prev + th.b * ds[2]};
            s2 = th.omega + th.a * r2 + th.b * s2_prev;
            ds[0] = ds_new[0];
            ds[1] = ds_new[1];
            ds[2] = ds_new[2];
        }
        const double r2t = r[t] * r[t];
        ll += -0.5 * (log2pi + std::log(s2) + r2t / s2);
        const double dll_ds2 = -0.5 * (1.0 / s2 - r2t / (s2 * s2));
        for (int k = 0; k < 3; ++k) gl[k] += dll_ds2 * ds[k];
    }
    // Chain to the unconstrained coordinates.
    const double dp = th.p * (1.0 - th.p), dq = th.q * (1.0 - th.q);
    grad[0] = gl[0] * th.omega;
    grad[1] = gl[1] * dp * th.q + gl[2] * dp * (1.0 - th.q);
    grad[2] = gl[1] * th.p * dq - gl[2] * th.p * dq;
    return ll;
}

// Adam ascent with monotone backtracking: a proposed step that lowers the
// objective is geometrically shrunk before acceptance.
template <typename F>
double monotone_adam(F&& eval, double* u, int dim, const QmleOptions& opt,
                     double* final_grad_norm) {
    std::vector<double> m(static_cast<std::size_t>(dim), 0.0),
        v(static_cast<std::size_t>(dim), 0.0), grad(static_cast<std::size_t>(dim), 0.0),
        trial(static_cast<std::size_t>(dim), 0.0);
    double ll = eval(u, grad.data());
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    double gnorm = 0.0;
    for (int it = 1; it <= opt.max_iterations; ++it) {
        gnorm = 0.0;
        for (int k = 0; k < dim; ++k) gnorm = std::max(gnorm, std::abs(grad[static_cast<std::size_t>(k)]));
        if (gnorm < opt.grad_tol) break;
        const double bc1 = 1.0 - std::pow(beta1, it);
        const double bc2 = 1.0 - std::pow(beta2, it);
        for (int k = 0; k < dim; ++k) {
            const double gk = grad[static_cast<std::size_t>(k)];
            m[static_cast<std::size_t>(k)] = beta1 * m[static_cast<std::size_t>(k)] + (1.0 - beta1) * gk;
            v[static_cast<std::size_t>(k)] = beta2 * v[static_cast<std::size_t>(k)] + (1.0 - beta2) * gk * gk;
        }
        double scale = 1.0;
        bool accepted = false;
        for (int half = 0; half < 40; ++half) {
            for (int k = 0; k < dim; ++k)
                trial[static_cast<std::size_t>(k)] =
                    u[k] + scale * opt.lr * (m[static_cast<std::size_t>(k)] / bc1) /
                               (std::sqrt(v[static_cast<std::size_t>(k)] / bc2) + eps);
            std::vector<double> trial_grad(static_cast<std::size_t>(dim), 0.0);
            const double trial_ll = eval(trial.data(), trial_grad.data());
            if (trial_ll >= ll - 1e-12) {
                for (int k = 0; k < dim; ++k) u[k] = trial[static_cast<std::size_t>(k)];
                ll = trial_ll;
                grad = trial_grad;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if (!accepted) break;  // no uphill step left at machine scale
    }
    if (final_grad_norm) *final_grad_norm = gnorm;
    return ll;
}

}  // namespace

Garch11Fit fit_garch11(std::span<const double> returns, const QmleOptions& opt) {
    if (returns.size() < 100)
        throw std::invalid_argument("fit_garch11: need at least 100 observations");
    double mean = 0.0;
    for (double x : returns) mean += x;
    mean /= static_cast<double>(returns.size());
    double var = 0.0;
    for (double x : returns) var += (x - mean) * (x - mean);
    var /= static_cast<double>(returns.size());
    // Relative threshold: a constant series leaves only rounding residue
    // of order (eps * mean)^2 in the variance accumulator.
    if (var < 1e-20 * (1.0 + mean * mean))
        throw std::invalid_argument("fit_garch11: degenerate (constant) series");

    double u[3] = {std::log(0.1 * var), std::log(0.9 / 0.1), std::log(0.1 / 0.9)};
    double gnorm = 0.0;
    // Optimize the per-observation mean log-likelihood: the summed objective
    // hits double-rounding noise in the monotone acceptance test long before
    // its gradient reaches grad_tol, so the tolerance is scale-free this way.
    const double inv_n = 1.0 / static_cast<double>(returns.size());
    auto eval = [&](const double* uu, double* grad) {
        const double ll = garch_loglik_grad(returns, uu, grad);
        for (int k = 0; k < 3; ++k) grad[k] *= inv_n;
        return ll * inv_n;
    };
    const double ll = monotone_adam(eval, u, 3, opt, &gnorm) / inv_n;
    if (gnorm > 100.0 * opt.grad_tol)
        throw QmleError("fit_garch11: no convergence after " +
                        std::to_string(opt.max_iterations) +
                        " iterations, grad norm = " + std::to_string(gnorm));
    const GarchTheta th = GarchTheta::from(u);
    Garch11Fit fit;
    fit.omega = th.omega;
    fit.a = th.a;
    fit.b = th.b;
    fit.loglik = ll;
    fit.sigma2.resize(returns.size());
    double s2 = var;
    for (std::size_t t = 0; t < returns.size(); ++t) {
        if (t > 0) s2 = th.omega + th.a * returns[t - 1] * returns[t - 1] + th.b * s2;
        fit.sigma2[t] = s2;
    }
    return fit;
}

namespace {

Eigen::MatrixXd to_eigen(const Tensor& t) {
    Eigen::MatrixXd m(t.rows(), t.cols());
    for (std::size_t i = 0; i < t.rows(); ++i)
        for (std::size_t j = 0; j < t.cols(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t.at(i, j);
    return m;
}

Tensor from_eigen(const Eigen::MatrixXd& m) {
    Tensor t = Tensor::zeros(static_cast<std::size_t>(m.rows()),
                             static_cast<std::size_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            t.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = m(i, j);
    return t;
}

// DCC(1,1) Gaussian quasi-likelihood (correlation part only).
double dcc_loglik(const Eigen::MatrixXd& z, const Eigen::MatrixXd& qbar, double a, double b) {
    const Eigen::Index n = z.rows();
    Eigen::MatrixXd Q = qbar;
    double ll = 0.0;
    for (Eigen::Index t = 0; t < n; ++t) {
        if (t > 0) {
            const Eigen::VectorXd zp = z.row(t - 1).transpose();
            Q = (1.0 - a - b) * qbar + a * (zp * zp.transpose()) + b * Q;
        }
        Eigen::VectorXd d = Q.diagonal().cwiseSqrt().cwiseInverse();
        Eigen::MatrixXd R = d.asDiagonal() * Q * d.asDiagonal();
        Eigen::LLT<Eigen::MatrixXd> llt(R);
        if (llt.info() != Eigen::Success) return -1e100;
        const Eigen::VectorXd zt = z.row(t).transpose();
        const Eigen::VectorXd w = llt.solve(zt);
        double logdet = 0.0;
        for (Eigen::Index i = 0; i < R.rows(); ++i)
            logdet += 2.0 * std::log(llt.matrixL()(i, i));
        ll += -0.5 * (logdet + zt.dot(w) - zt.dot(zt));
    }
    return ll;
}

}  // namespace

DccFit fit_dcc(const Tensor& std_residuals, const QmleOptions& opt) {
    const std::size_t n = std_residuals.rows(), M = std_residuals.cols();
    if (n < 100) throw std::invalid_argument("fit_dcc: need at least 100 observations");
    Eigen::MatrixXd z = to_eigen(std_residuals);
    // Unconditional correlation of the standardized residuals.
    Eigen::VectorXd mu = z.colwise().mean();
    Eigen::MatrixXd centered = z.rowwise() - mu.transpose();
    Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n);
    Eigen::VectorXd d = cov.diagonal().cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd qbar = d.asDiagonal() * cov * d.asDiagonal();
    for (Eigen::Index i = 0; i < qbar.rows(); ++i) qbar(i, i) = 1.0;

    DccFit fit;
    fit.qbar = from_eigen(qbar);
    if (M == 1) {  // scalar correlation is identically 1
        fit.a = 0.0;
        fit.b = 0.0;
        fit.loglik = 0.0;
        return fit;
    }

    // (a, b) via the same logistic reparameterization; gradient by central
    // differences (two free coordinates only).
    double u[2] = {std::log(0.9 / 0.1), std::log(0.05 / 0.95)};
    auto theta = [](const double* uu, double& a, double& b) {
        const double p = sigmoid(uu[0]), q = sigmoid(uu[1]);
        a = p * q;
        b = p * (1.0 - q);
    };
    const double inv_n = 1.0 / static_cast<double>(n);  // per-observation scaling
    auto eval = [&](const double* uu, double* grad) {
        double a, b;
        theta(uu, a, b);
        const double ll = dcc_loglik(z, qbar, a, b);
        const double h = 1e-5;
        for (int k = 0; k < 2; ++k) {
            double up[2] = {uu[0], uu[1]}, dn[2] = {uu[0], uu[1]};
            up[k] += h;
            dn[k] -= h;
            double au, bu, ad, bd;
            theta(up, au, bu);
            theta(dn, ad, bd);
            grad[k] = inv_n *
                      (dcc_loglik(z, qbar, au, bu) - dcc_loglik(z, qbar, ad, bd)) / (2.0 * h);
        }
        return ll * inv_n;
    };
    double gnorm = 0.0;
    QmleOptions dcc_opt = opt;
    dcc_opt.grad_tol = std::max(opt.grad_tol, 1e-6);  // FD gradient noise floor
    fit.loglik = monotone_adam(eval, u, 2, dcc_opt, &gnorm) / inv_n;
    if (gnorm > 100.0 * dcc_opt.grad_tol)
        throw QmleError("fit_dcc: no convergence, grad norm = " + std::to_string(gnorm));
    theta(u, fit.a, fit.b);
    return fit;
}

std::pair<GarchParams, GarchState> fit_dcc_garch(const Tensor& returns, const QmleOptions& opt) {
    const std::size_t n = returns.rows(), M = returns.cols();
    GarchParams params;
    Tensor residuals = Tensor::zeros(n, M);
    std::vector<double> series(n);
    std::vector<double> last_sigma2(M), last_r(M);
    for (std::size_t j = 0; j < M; ++j) {
        for (std::size_t t = 0; t < n; ++t) series[t] = returns.at(t, j);
        Garch11Fit fit = fit_garch11(series, opt);
        params.omega.push_back(fit.omega);
        params.a.push_back(fit.a);
        params.b.push_back(fit.b);
        for (std::size_t t = 0; t < n; ++t)
            residuals.at(t, j) = series[t] / std::sqrt(fit.sigma2[t]);
        last_sigma2[j] = fit.omega + fit.a * series[n - 1] * series[n - 1] +
                         fit.b * fit.sigma2[n - 1];
        last_r[j] = series[n - 1];
    }
    DccFit dcc = fit_dcc(residuals, opt);
    params.dcc_a = dcc.a;
    params.dcc_b = dcc.b;
    params.qbar = dcc.qbar;
    params.validate();

    // Filter Q_t over the sample to obtain the forecast state.
    Eigen::MatrixXd qbar = to_eigen(params.qbar);
    Eigen::MatrixXd Q = qbar;
    for (std::size_t t = 1; t < n; ++t) {
        Eigen::VectorXd zp(M);
        for (std::size_t j = 0; j < M; ++j) zp(static_cast<Eigen::Index>(j)) = residuals.at(t - 1, j);
        Q = (1.0 - dcc.a - dcc.b) * qbar + dcc.a * (zp * zp.transpose()) + dcc.b * Q;
    }
    GarchState state;
    state.sigma2 = last_sigma2;
    state.z.resize(M);
    for (std::size_t j = 0; j < M; ++j) state.z[j] = residuals.at(n - 1, j);
    Eigen::VectorXd zl(M);
    for (std::size_t j = 0; j < M; ++j) zl(static_cast<Eigen::Index>(j)) = state.z[j];
    Q = (1.0 - dcc.a - dcc.b) * qbar + dcc.a * (zl * zl.transpose()) + dcc.b * Q;
    state.q = from_eigen(Q);
    return {params, state};
}

std::vector<Tensor> simulate_dcc_garch(const GarchParams& params, const GarchState& state,
                                       int horizon, int n, std::uint64_t seed) {
    params.validate();
    const std::size_t M = params.n_assets();
    if (horizon < 1 || n < 1) throw std::invalid_argument("simulate_dcc_garch: bad sizes");
    const Eigen::MatrixXd qbar = to_eigen(params.qbar);
    std::vector<Tensor> paths;
    paths.reserve(static_cast<std::size_t>(n));
    for (int path = 0; path < n; ++path) {
        SequentialRng rng(mix64(seed ^ (0x70617468ULL + static_cast<std::uint64_t>(path))));
        Eigen::MatrixXd Q = state.q.numel() ? to_eigen(state.q) : qbar;
        std::vector<double> sigma2 = state.sigma2;
        if (sigma2.empty())
            for (std::size_t j = 0; j < M; ++j)
                sigma2.push_back(params.omega[j] / (1.0 - params.a[j] - params.b[j]));
        Tensor y = Tensor::zeros(M, static_cast<std::size_t>(horizon));
        for (int t = 0; t < horizon; ++t) {
            Eigen::VectorXd d = Q.diagonal().cwiseSqrt().cwiseInverse();
            Eigen::MatrixXd R = d.asDiagonal() * Q * d.asDiagonal();
            Eigen::LLT<Eigen::MatrixXd> llt(R);
            int jitter = 0;
            while (llt.info() != Eigen::Success && jitter < 8) {
                R.diagonal().array() += 1e-8;
                llt.compute(R);
                ++jitter;
            }
            if (llt.info() != Eigen::Success)
                throw std::runtime_error("simulate_dcc_garch: R_t not positive definite");
            Eigen::VectorXd xi(M);
            for (std::size_t j = 0; j < M; ++j) xi(static_cast<Eigen::Index>(j)) = rng.normal();
            Eigen::VectorXd eps = llt.matrixL() * xi;  // correlated unit-variance shocks
            Eigen::VectorXd zt(M);
            for (std::size_t j = 0; j < M; ++j) {
                const double r = std::sqrt(sigma2[j]) * eps(static_cast<Eigen::Index>(j));
                y.at(j, static_cast<std::size_t>(t)) = r;
                zt(static_cast<Eigen::Index>(j)) = eps(static_cast<Eigen::Index>(j));
                sigma2[j] = params.omega[j] + params.a[j] * r * r + params.b[j] * sigma2[j];
            }
            Q = (1.0 - params.dcc_a - params.dcc_b) * qbar +
                params.dcc_a * (zt * zt.transpose()) + params.dcc_b * Q;
        }
        paths.push_back(std::move(y));
    }
    return paths;
}

void save_garch_json(const GarchParams& params, const GarchState& state,
                     const std::string& path) {
    nlohmann::json j;
    j["omega"] = params.omega;
    j["a"] = params.a;
    j["b"] = params.b;
    j["dcc_a"] = params.dcc_a;
    j["dcc_b"] = params.dcc_b;
    j["qbar"] = params.qbar.data;  // row-major
    j["state"]["sigma2"] = state.sigma2;
    j["state"]["q"] = state.q.data;
    j["state"]["z"] = state.z;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

std::pair<GarchParams, GarchState> load_garch_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    GarchParams params;
    params.omega = j.at("omega").get<std::vector<double>>();
    params.a = j.at("a").get<std::vector<double>>();
    params.b = j.at("b").get<std::vector<double>>();
    params.dcc_a = j.at("dcc_a").get<double>();
    params.dcc_b = j.at("dcc_b").get<double>();
    const std::size_t M = params.omega.size();
    params.qbar = Tensor({M, M}, j.at("qbar").get<std::vector<double>>());
    GarchState state;
    state.sigma2 = j.at("state").at("sigma2").get<std::vector<double>>();
    state.q = Tensor({M, M}, j.at("state").at("q").get<std::vector<double>>());
    state.z = j.at("state").at("z").get<std::vector<double>>();
    params.validate();
    return {params, state};
}

}  // namespace gar
