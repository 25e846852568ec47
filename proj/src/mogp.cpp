#include "auvgp/mogp.hpp"

#include <atomic>
#include <cmath>
#include <numbers>
#include <random>

#include <omp.h>

#include "auvgp/jsonio.hpp"
#include "auvgp/optim.hpp"

namespace auvgp {

namespace {

std::atomic<long> g_negative_variance_warnings{0};

int total_rows_of(const std::vector<Mat>& X) {
    int n = 0;
    for (const Mat& x : X) n += static_cast<int>(x.rows());
    return n;
}

std::vector<int> sizes_of(const std::vector<Mat>& X) {
    std::vector<int> sizes;
    sizes.reserve(X.size());
    for (const Mat& x : X) sizes.push_back(static_cast<int>(x.rows()));
    return sizes;
}

double nll_from_factor(const CholeskyFactor& f, const Vec& y,
                       const Vec& alpha) {
    const auto n = static_cast<double>(y.size());
    return 0.5 * y.dot(alpha) + 0.5 * log_det(f) +
           0.5 * n * std::log(2.0 * std::numbers::pi);
}

/// Negative log marginal likelihood objective over packed parameters.
/// Caches the factorization of the last evaluated point so the gradient
/// call after an accepted line-search step reuses it.
class NllObjective {
  public:
    NllObjective(const Hyperparameters& proto, const std::vector<Mat>& X,
                 const Vec& y)
        : hp_(proto), X_(X), y_(y) {}

    double value(const Vec& theta) {
        if (!ensure_factor(theta)) return std::numeric_limits<double>::infinity();
        return nll_;
    }

    double value_and_grad(const Vec& theta, Vec& grad) {
        if (!ensure_factor(theta)) {
            grad.setZero();
            return std::numeric_limits<double>::infinity();
        }
        const Mat kinv = spd_inverse(factor_);
        Mat asym = alpha_ * alpha_.transpose();
        asym -= kinv;
        grad = -accumulate_likelihood_gradient(hp_, X_, asym);
        return nll_;
    }

    const CholeskyFactor& factor() const { return factor_; }
    const Vec& alpha() const { return alpha_; }
    double base_jitter() const { return base_jitter_; }
    const Hyperparameters& hp() const { return hp_; }

  private:
    bool ensure_factor(const Vec& theta) {
        if (cached_ && theta.size() == cached_theta_.size() &&
            theta == cached_theta_)
            return cached_ok_;
        cached_theta_ = theta;
        cached_ = true;
        hp_.unpack(theta);
        try {
            const Mat k = assemble_full_covariance(hp_, X_, &base_jitter_);
            factor_ = factor_spd(k, base_jitter_);
        } catch (const NotPositiveDefinite&) {
            cached_ok_ = false;
            return false;
        }
        alpha_ = chol_solve(factor_, y_);
        nll_ = nll_from_factor(factor_, y_, alpha_);
        cached_ok_ = std::isfinite(nll_);
        return cached_ok_;
    }

    Hyperparameters hp_;
    const std::vector<Mat>& X_;
    const Vec& y_;
    Vec cached_theta_;
    bool cached_ = false;
    bool cached_ok_ = false;
    CholeskyFactor factor_;
    Vec alpha_;
    double nll_ = 0;
    double base_jitter_ = 0;
};

Vec draw_start(const Hyperparameters& proto, const OptimizerConfig& opt,
               std::uint64_t seed) {
    Hyperparameters hp = proto;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(opt.init_low, opt.init_high);
    // Length scales are drawn around sqrt(D) so that unit-scaled regressors
    // start meaningfully correlated, and each sensitivity is rescaled by the
    // smoothing kernel's self-convolution amplitude so every draw starts near
    // unit prior variance. Without the rescaling the unnormalized kernel
    // couples S and ell across D dimensions and random draws start tens of
    // orders of magnitude off scale.
    const double ell_shift = 0.5 * std::log(static_cast<double>(hp.D));
    for (int q = 0; q < hp.Q; ++q)
        for (int r = 0; r < hp.R; ++r) {
            if (!hp.is_active(q, r)) continue;
            double log_amp = 0.0;
            for (int d = 0; d < hp.D; ++d) {
                const double le = unif(rng) + ell_shift;
                hp.log_ell(q * hp.R + r, d) = le;
                log_amp += 0.5 * (std::log(std::numbers::pi) + 2.0 * le);
            }
            hp.S(q, r) = unif(rng) * std::exp(-0.5 * log_amp);
        }
    for (int r = 0; r < hp.R; ++r) hp.log_sigma_u2(r) = unif(rng);
    hp.log_sigma_w2.setConstant(opt.noise_log_init);
    return hp.pack();
}

}  // namespace

double log_marginal_likelihood(const Hyperparameters& hp,
                               const std::vector<Mat>& X, const Vec& y) {
    if (y.size() != total_rows_of(X))
        throw ConfigError("log_marginal_likelihood: y length must match the "
                          "stacked input rows");
    double base_jitter = 0;
    const Mat k = assemble_full_covariance(hp, X, &base_jitter);
    const CholeskyFactor f = factor_spd(k, base_jitter);
    const Vec alpha = chol_solve(f, y);
    return -nll_from_factor(f, y, alpha);
}

double lml_and_gradient(const Hyperparameters& hp, const std::vector<Mat>& X,
                        const Vec& y, Vec& grad) {
    if (y.size() != total_rows_of(X))
        throw ConfigError("lml_and_gradient: y length must match the stacked "
                          "input rows");
    NllObjective obj(hp, X, y);
    Vec neg_grad(hp.n_params());
    const double nll = obj.value_and_grad(hp.pack(), neg_grad);
    grad = -neg_grad;
    return -nll;
}

void TrainedModel::refactor() {
    const Mat k = assemble_full_covariance(hp, X, &base_jitter);
    factor = factor_spd(k, base_jitter);
    alpha = chol_solve(factor, y);
}

struct RestartCandidate {
    Vec theta;
    double nll = std::numeric_limits<double>::infinity();
    int restart = -1;
    int iterations = 0;
    int f_evals = 0;
    bool converged = false;
};

void keep_better(bool& have, RestartCandidate& best,
                 const RestartCandidate& cand) {
    if (!have || cand.nll < best.nll) {
        have = true;
        best = cand;
    }
}

TrainedModel train(const std::vector<Mat>& X, const Vec& y,
                   const ModelConfig& model, const OptimizerConfig& opt,
                   std::uint64_t seed, const RestartScreen& screen) {
    if (X.empty()) throw ConfigError("train: no input blocks");
    if (y.size() != total_rows_of(X))
        throw ConfigError("train: y length must match the stacked input rows");
    const int Q = static_cast<int>(X.size());
    const int D = static_cast<int>(X[0].cols());
    const Hyperparameters proto =
        Hyperparameters::make(Q, model.latents, D, model.independent_terms);

    BoxLbfgsOptions lopt;
    lopt.max_iterations = opt.max_iterations;
    lopt.tol_df = opt.tol_df;
    lopt.tol_grad = opt.tol_grad;
    lopt.memory = opt.memory;
    lopt.lower = -opt.bound;
    lopt.upper = opt.bound;

    NllObjective obj(proto, X, y);
    auto value = [&obj](const Vec& th) { return obj.value(th); };
    auto value_and_grad = [&obj](const Vec& th, Vec& g) {
        return obj.value_and_grad(th, g);
    };

    TrainingMeta meta;
    meta.restarts_attempted = opt.restarts;
    bool have_accepted = false, have_fallback = false;
    RestartCandidate best_accepted, best_fallback;
    for (int restart = 0; restart < opt.restarts; ++restart) {
        const Vec theta0 = draw_start(proto, opt, mix_seed(seed, restart));
        BoxLbfgsResult res =
            minimize_box_lbfgs(value, value_and_grad, theta0, lopt);
        if (!std::isfinite(res.f)) continue;
        ++meta.restarts_succeeded;
        RestartCandidate cand;
        cand.theta = res.x;
        cand.nll = res.f;
        cand.restart = restart;
        cand.iterations = res.iterations;
        cand.f_evals = res.f_evals + res.g_evals;
        cand.converged = res.converged;
        bool accepted = true;
        if (screen) {
            TrainedModel probe;
            probe.hp = proto;
            probe.hp.unpack(res.x);
            probe.X = X;
            probe.y = y;
            try {
                probe.refactor();
                accepted = screen(probe);
            } catch (const NotPositiveDefinite&) {
                accepted = false;
            }
            if (!accepted) ++meta.restarts_rejected;
        }
        if (accepted)
            keep_better(have_accepted, best_accepted, cand);
        else
            keep_better(have_fallback, best_fallback, cand);
    }
    if (!have_accepted && !have_fallback)
        throw AllRestartsFailed("train: no restart produced a finite "
                                "likelihood in " +
                                std::to_string(opt.restarts) + " attempts");
    const RestartCandidate& win =
        have_accepted ? best_accepted : best_fallback;
    meta.best_restart = win.restart;
    meta.iterations = win.iterations;
    meta.f_evals = win.f_evals;
    meta.converged = win.converged;
    meta.final_log_marginal = -win.nll;

    TrainedModel out;
    out.hp = proto;
    out.hp.unpack(win.theta);
    out.X = X;
    out.y = y;
    out.meta = meta;
    out.refactor();
    return out;
}

namespace {

/// Cross covariance column between query (output q) and all training rows.
void fill_kstar(const CovarianceStructure& st, const std::vector<Mat>& xt,
                const Vec& x, Mat& kstar) {
    const int Q = st.Q;
    for (int q = 0; q < Q; ++q)
        for (int s = 0; s < Q; ++s) {
            const int ns = st.offset[s + 1] - st.offset[s];
            for (int j = 0; j < ns; ++j) {
                double acc = 0;
                // terms(q,s) hands back the q<=s orientation; the entry
                // value only uses symmetric combinations, so that is fine.
                for (const PairTerm& t : st.terms(q, s)) {
                    double quad = 0;
                    for (int d = 0; d < st.D; ++d) {
                        const double delta = x(d) - xt[s](d, j);
                        quad += t.w(d) * delta * delta;
                    }
                    acc += t.amp * t.Sq * t.Ss * std::exp(-0.5 * quad);
                }
                kstar(st.offset[s] + j, q) = acc;
            }
        }
}

Vec prior_variances(const Hyperparameters& hp) {
    Vec prior = Vec::Zero(hp.Q);
    for (int q = 0; q < hp.Q; ++q)
        for (int r = 0; r < hp.R; ++r) {
            if (!hp.is_active(q, r)) continue;
            double amp = hp.sigma_u2(r) * hp.S(q, r) * hp.S(q, r);
            for (int d = 0; d < hp.D; ++d) {
                const double l2 = std::exp(2.0 * hp.log_ell(q * hp.R + r, d));
                amp *= std::sqrt(std::numbers::pi * l2);
            }
            prior(q) += amp;
        }
    return prior;
}

double clamp_variance(double v) {
    if (v >= 0) return v;
    if (v < -1e-10) ++g_negative_variance_warnings;
    return 0;
}

}  // namespace

Prediction predict(const TrainedModel& model, const Vec& x) {
    Mat mean, variance;
    Mat queries(1, x.size());
    queries.row(0) = x.transpose();
    predict_batch(model, queries, mean, variance);
    return {mean.row(0).transpose(), variance.row(0).transpose()};
}

void predict_batch(const TrainedModel& model, const Mat& queries, Mat& mean,
                   Mat& variance) {
    const Hyperparameters& hp = model.hp;
    if (queries.cols() != hp.D)
        throw ConfigError("predict: query has " +
                          std::to_string(queries.cols()) +
                          " columns, expected " + std::to_string(hp.D));
    const CovarianceStructure st = build_structure(hp, sizes_of(model.X));
    std::vector<Mat> xt;
    xt.reserve(model.X.size());
    for (const Mat& x : model.X) xt.push_back(x.transpose());
    const Vec prior = prior_variances(hp);
    const int n = static_cast<int>(queries.rows());
    const int total = st.total();
    mean.resize(n, hp.Q);
    variance.resize(n, hp.Q);
#pragma omp parallel num_threads(thread_count())
    {
        Mat kstar(total, hp.Q);
        Mat v(total, hp.Q);
#pragma omp for schedule(static)
        for (int i = 0; i < n; ++i) {
            const Vec x = queries.row(i).transpose();
            fill_kstar(st, xt, x, kstar);
            mean.row(i) = (kstar.transpose() * model.alpha).transpose();
            v = kstar;
            model.factor.L.triangularView<Eigen::Lower>().solveInPlace(v);
            // Latent-function variance: the prior self-covariance minus the
            // explained part. Observation noise is a property of the
            // training targets, not of the function estimate, and is left
            // out of the reported uncertainty.
            for (int q = 0; q < hp.Q; ++q)
                variance(i, q) = clamp_variance(prior(q) -
                                                v.col(q).squaredNorm());
        }
    }
}

long negative_variance_warnings() {
    return g_negative_variance_warnings.load();
}

void reset_negative_variance_warnings() {
    g_negative_variance_warnings.store(0);
}

std::vector<TrainedModel> train_independent_baseline(
    const Mat& X, const Mat& Y, const OptimizerConfig& opt,
    std::uint64_t seed,
    const std::function<bool(int, const TrainedModel&)>& screen) {
    if (X.rows() != Y.rows())
        throw ConfigError("train_independent_baseline: X and Y row mismatch");
    ModelConfig single;
    single.latents = 1;
    single.independent_terms = false;
    std::vector<TrainedModel> models;
    models.reserve(Y.cols());
    for (Eigen::Index q = 0; q < Y.cols(); ++q) {
        const Vec y = Y.col(q);
        RestartScreen per_output;
        if (screen)
            per_output = [&screen, qi = static_cast<int>(q)](
                             const TrainedModel& m) { return screen(qi, m); };
        models.push_back(train({X}, y, single, opt,
                               mix_seed(seed, 1000 + static_cast<int>(q)),
                               per_output));
    }
    return models;
}

nlohmann::json TrainedModel::to_json() const {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["hyperparameters"] = hp.to_json();
    nlohmann::json blocks = nlohmann::json::array();
    for (const Mat& x : X) blocks.push_back(mat_to_json(x));
    j["X"] = std::move(blocks);
    j["y"] = vec_to_json(y);
    j["normalization"] = norm.to_json();
    j["lag"] = lag;
    j["meta"] = {{"restarts_attempted", meta.restarts_attempted},
                 {"restarts_succeeded", meta.restarts_succeeded},
                 {"restarts_rejected", meta.restarts_rejected},
                 {"best_restart", meta.best_restart},
                 {"iterations", meta.iterations},
                 {"f_evals", meta.f_evals},
                 {"converged", meta.converged},
                 {"final_log_marginal", meta.final_log_marginal}};
    return j;
}

TrainedModel TrainedModel::from_json(const nlohmann::json& j) {
    const std::string what = "trained model";
    const int version = require_field(j, "schema_version", what).get<int>();
    if (version != 1)
        throw ConfigError(what + ": unsupported schema_version " +
                          std::to_string(version));
    TrainedModel m;
    m.hp = Hyperparameters::from_json(require_field(j, "hyperparameters", what));
    const auto& blocks = require_field(j, "X", what);
    if (!blocks.is_array() || static_cast<int>(blocks.size()) != m.hp.Q)
        throw ConfigError(what + ": X must hold one block per output");
    for (const auto& b : blocks) m.X.push_back(json_to_mat(b, what + ".X"));
    m.y = json_to_vec(require_field(j, "y", what), what + ".y");
    m.norm = NormalizationMap::from_json(require_field(j, "normalization", what));
    m.lag = require_field(j, "lag", what).get<int>();
    const auto& meta = require_field(j, "meta", what);
    m.meta.restarts_attempted =
        require_field(meta, "restarts_attempted", what).get<int>();
    m.meta.restarts_succeeded =
        require_field(meta, "restarts_succeeded", what).get<int>();
    m.meta.restarts_rejected =
        require_field(meta, "restarts_rejected", what).get<int>();
    m.meta.best_restart = require_field(meta, "best_restart", what).get<int>();
    m.meta.iterations = require_field(meta, "iterations", what).get<int>();
    m.meta.f_evals = require_field(meta, "f_evals", what).get<int>();
    m.meta.converged = require_field(meta, "converged", what).get<bool>();
    m.meta.final_log_marginal =
        require_field(meta, "final_log_marginal", what).get<double>();
    for (const Mat& x : m.X)
        if (x.cols() != m.hp.D)
            throw ConfigError(what + ": input block width mismatch");
    int rows = 0;
    for (const Mat& x : m.X) rows += static_cast<int>(x.rows());
    if (m.y.size() != rows)
        throw ConfigError(what + ": y length must match the stacked inputs");
    m.refactor();
    return m;
}

}  // namespace auvgp
