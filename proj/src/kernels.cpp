#include "auvgp/kernels.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numbers>

#include <omp.h>

#include "auvgp/jsonio.hpp"

namespace auvgp {

namespace {

std::atomic<int> g_thread_count{0};

int resolve_env_threads() {
    const char* env = std::getenv("MOGP_THREADS");
    if (env == nullptr || *env == '\0') return 0;
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || n < 1) return 0;
    return static_cast<int>(n);
}

}  // namespace

int thread_count() {
    const int explicit_n = g_thread_count.load();
    if (explicit_n > 0) return explicit_n;
    static const int env_n = resolve_env_threads();
    if (env_n > 0) return env_n;
    return omp_get_max_threads();
}

void set_thread_count(int n) { g_thread_count.store(n > 0 ? n : 0); }

Hyperparameters Hyperparameters::make(int Q, int R, int D,
                                      bool independent_terms) {
    if (Q < 1 || R < 1 || D < 1)
        throw ConfigError("Hyperparameters::make: Q, R, D must be positive");
    Hyperparameters hp;
    hp.Q = Q;
    hp.D = D;
    hp.R = independent_terms ? R + Q : R;
    hp.S = Mat::Zero(Q, hp.R);
    hp.log_ell = Mat::Zero(Q * hp.R, D);
    hp.log_sigma_u2 = Vec::Zero(hp.R);
    hp.log_sigma_w2 = Vec::Zero(Q);
    hp.active = Eigen::ArrayXXi::Zero(Q, hp.R);
    for (int q = 0; q < Q; ++q) {
        for (int r = 0; r < R; ++r) hp.active(q, r) = 1;
        if (independent_terms) hp.active(q, R + q) = 1;
    }
    return hp;
}

void Hyperparameters::validate() const {
    if (Q < 1 || R < 1 || D < 1)
        throw ConfigError("Hyperparameters: Q, R, D must be positive");
    if (S.rows() != Q || S.cols() != R)
        throw ConfigError("Hyperparameters: S must be Q x R");
    if (log_ell.rows() != Q * R || log_ell.cols() != D)
        throw ConfigError("Hyperparameters: log_ell must be (Q*R) x D");
    if (log_sigma_u2.size() != R)
        throw ConfigError("Hyperparameters: log_sigma_u2 must have R entries");
    if (log_sigma_w2.size() != Q)
        throw ConfigError("Hyperparameters: log_sigma_w2 must have Q entries");
    if (active.rows() != Q || active.cols() != R)
        throw ConfigError("Hyperparameters: active mask must be Q x R");
    const bool finite = S.allFinite() && log_ell.allFinite() &&
                        log_sigma_u2.allFinite() && log_sigma_w2.allFinite();
    if (!finite) throw ConfigError("Hyperparameters: non-finite value");
    for (int r = 0; r < R; ++r) {
        bool any = false;
        for (int q = 0; q < Q; ++q) any = any || active(q, r) != 0;
        if (!any)
            throw ConfigError("Hyperparameters: latent " + std::to_string(r) +
                              " is inactive for every output");
    }
}

ParamLayout make_layout(const Hyperparameters& hp) {
    ParamLayout lay;
    lay.s_idx.assign(static_cast<std::size_t>(hp.Q) * hp.R, -1);
    lay.ell_idx.assign(static_cast<std::size_t>(hp.Q) * hp.R, -1);
    lay.u_idx.resize(hp.R);
    lay.w_idx.resize(hp.Q);
    int pos = 0;
    for (int q = 0; q < hp.Q; ++q)
        for (int r = 0; r < hp.R; ++r)
            if (hp.is_active(q, r)) lay.s_idx[q * hp.R + r] = pos++;
    for (int q = 0; q < hp.Q; ++q)
        for (int r = 0; r < hp.R; ++r)
            if (hp.is_active(q, r)) {
                lay.ell_idx[q * hp.R + r] = pos;
                pos += hp.D;
            }
    for (int r = 0; r < hp.R; ++r) lay.u_idx[r] = pos++;
    for (int q = 0; q < hp.Q; ++q) lay.w_idx[q] = pos++;
    lay.n_params = pos;
    return lay;
}

int Hyperparameters::n_params() const { return make_layout(*this).n_params; }

double Hyperparameters::log_sensitivity_scale(int q, int r) const {
    double acc = 0.0;
    for (int d = 0; d < D; ++d)
        acc += std::log(std::numbers::pi) + 2.0 * log_ell(q * R + r, d);
    return 0.25 * acc;
}

Vec Hyperparameters::pack() const {
    const ParamLayout lay = make_layout(*this);
    Vec theta(lay.n_params);
    for (int q = 0; q < Q; ++q)
        for (int r = 0; r < R; ++r) {
            if (!is_active(q, r)) continue;
            theta(lay.s_idx[q * R + r]) =
                S(q, r) * std::exp(log_sensitivity_scale(q, r));
            theta.segment(lay.ell_idx[q * R + r], D) =
                log_ell.row(q * R + r).transpose();
        }
    for (int r = 0; r < R; ++r) theta(lay.u_idx[r]) = log_sigma_u2(r);
    for (int q = 0; q < Q; ++q) theta(lay.w_idx[q]) = log_sigma_w2(q);
    return theta;
}

void Hyperparameters::unpack(const Vec& theta) {
    const ParamLayout lay = make_layout(*this);
    if (theta.size() != lay.n_params)
        throw ConfigError("Hyperparameters::unpack: expected " +
                          std::to_string(lay.n_params) + " values, got " +
                          std::to_string(theta.size()));
    for (int q = 0; q < Q; ++q)
        for (int r = 0; r < R; ++r) {
            if (!is_active(q, r)) continue;
            log_ell.row(q * R + r) =
                theta.segment(lay.ell_idx[q * R + r], D).transpose();
            S(q, r) = theta(lay.s_idx[q * R + r]) *
                      std::exp(-log_sensitivity_scale(q, r));
        }
    for (int r = 0; r < R; ++r) log_sigma_u2(r) = theta(lay.u_idx[r]);
    for (int q = 0; q < Q; ++q) log_sigma_w2(q) = theta(lay.w_idx[q]);
}

nlohmann::json Hyperparameters::to_json() const {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["Q"] = Q;
    j["R"] = R;
    j["D"] = D;
    j["log_space"] = true;  // length-scales and variances stored as logs
    j["S"] = mat_to_json(S);
    j["log_ell"] = mat_to_json(log_ell);
    j["log_sigma_u2"] = vec_to_json(log_sigma_u2);
    j["log_sigma_w2"] = vec_to_json(log_sigma_w2);
    nlohmann::json mask = nlohmann::json::array();
    for (int q = 0; q < Q; ++q) {
        nlohmann::json row = nlohmann::json::array();
        for (int r = 0; r < R; ++r) row.push_back(active(q, r));
        mask.push_back(std::move(row));
    }
    j["active"] = std::move(mask);
    return j;
}

Hyperparameters Hyperparameters::from_json(const nlohmann::json& j) {
    const std::string what = "hyperparameters";
    const int version = require_field(j, "schema_version", what).get<int>();
    if (version != 1)
        throw ConfigError(what + ": unsupported schema_version " +
                          std::to_string(version));
    if (!require_field(j, "log_space", what).get<bool>())
        throw ConfigError(what + ": log_space must be true");
    Hyperparameters hp;
    hp.Q = require_field(j, "Q", what).get<int>();
    hp.R = require_field(j, "R", what).get<int>();
    hp.D = require_field(j, "D", what).get<int>();
    hp.S = json_to_mat(require_field(j, "S", what), what + ".S");
    hp.log_ell =
        json_to_mat(require_field(j, "log_ell", what), what + ".log_ell");
    hp.log_sigma_u2 = json_to_vec(require_field(j, "log_sigma_u2", what),
                                  what + ".log_sigma_u2");
    hp.log_sigma_w2 = json_to_vec(require_field(j, "log_sigma_w2", what),
                                  what + ".log_sigma_w2");
    const Mat mask =
        json_to_mat(require_field(j, "active", what), what + ".active");
    if (mask.rows() != hp.Q || mask.cols() != hp.R)
        throw ConfigError(what + ": active mask must be Q x R");
    hp.active = Eigen::ArrayXXi(hp.Q, hp.R);
    for (int q = 0; q < hp.Q; ++q)
        for (int r = 0; r < hp.R; ++r)
            hp.active(q, r) = mask(q, r) != 0.0 ? 1 : 0;
    hp.validate();
    return hp;
}

double smoothing_kernel(const Hyperparameters& hp, int q, int r,
                        const Vec& x) {
    double quad = 0;
    for (int d = 0; d < hp.D; ++d) {
        const double l = hp.ell(q, r, d);
        quad += x(d) * x(d) / (l * l);
    }
    return hp.S(q, r) * std::exp(-0.5 * quad);
}

double cross_covariance(const Hyperparameters& hp, int q, int s, const Vec& x,
                        const Vec& x2) {
    double total = 0;
    for (int r = 0; r < hp.R; ++r) {
        if (!hp.is_active(q, r) || !hp.is_active(s, r)) continue;
        double amp = hp.sigma_u2(r) * hp.S(q, r) * hp.S(s, r);
        double quad = 0;
        for (int d = 0; d < hp.D; ++d) {
            const double lq2 = std::exp(2.0 * hp.log_ell(q * hp.R + r, d));
            const double ls2 = std::exp(2.0 * hp.log_ell(s * hp.R + r, d));
            const double sum2 = lq2 + ls2;
            amp *= std::sqrt(2.0 * std::numbers::pi * lq2 * ls2 / sum2);
            const double delta = x(d) - x2(d);
            quad += delta * delta / sum2;
        }
        total += amp * std::exp(-0.5 * quad);
    }
    return total;
}

CovarianceStructure build_structure(const Hyperparameters& hp,
                                    const std::vector<int>& sizes) {
    hp.validate();
    if (static_cast<int>(sizes.size()) != hp.Q)
        throw ConfigError("build_structure: need one size per output");
    CovarianceStructure st;
    st.Q = hp.Q;
    st.D = hp.D;
    st.offset.resize(hp.Q + 1);
    st.offset[0] = 0;
    for (int q = 0; q < hp.Q; ++q) {
        if (sizes[q] < 0)
            throw ConfigError("build_structure: negative output size");
        st.offset[q + 1] = st.offset[q] + sizes[q];
    }
    st.sigma_w2 = hp.log_sigma_w2.array().exp();
    st.block.resize(static_cast<std::size_t>(hp.Q) * hp.Q);
    for (int q = 0; q < hp.Q; ++q)
        for (int s = q; s < hp.Q; ++s) {
            auto& terms = st.block[q * hp.Q + s];
            for (int r = 0; r < hp.R; ++r) {
                if (!hp.is_active(q, r) || !hp.is_active(s, r)) continue;
                PairTerm t;
                t.r = r;
                t.Sq = hp.S(q, r);
                t.Ss = hp.S(s, r);
                t.w.resize(hp.D);
                t.uq.resize(hp.D);
                t.us.resize(hp.D);
                double amp = hp.sigma_u2(r);
                for (int d = 0; d < hp.D; ++d) {
                    const double lq2 =
                        std::exp(2.0 * hp.log_ell(q * hp.R + r, d));
                    const double ls2 =
                        std::exp(2.0 * hp.log_ell(s * hp.R + r, d));
                    const double w = 1.0 / (lq2 + ls2);
                    t.w(d) = w;
                    t.uq(d) = lq2 * w;
                    t.us(d) = ls2 * w;
                    amp *= std::sqrt(2.0 * std::numbers::pi * lq2 * ls2 * w);
                }
                t.amp = amp;
                terms.push_back(std::move(t));
            }
        }
    return st;
}

double structure_entry(const CovarianceStructure& st, int q, int s,
                       const Vec& x, const Vec& x2) {
    double acc = 0;
    for (const PairTerm& t : st.terms(q, s)) {
        double quad = 0;
        for (int d = 0; d < st.D; ++d) {
            const double delta = x(d) - x2(d);
            quad += t.w(d) * delta * delta;
        }
        acc += t.amp * t.Sq * t.Ss * std::exp(-0.5 * quad);
    }
    return acc;
}

namespace {

void check_inputs(const Hyperparameters& hp, const std::vector<Mat>& X) {
    if (static_cast<int>(X.size()) != hp.Q)
        throw ConfigError("covariance assembly: need one input block per output");
    for (const Mat& x : X)
        if (x.cols() != hp.D)
            throw ConfigError("covariance assembly: input block has " +
                              std::to_string(x.cols()) + " columns, expected " +
                              std::to_string(hp.D));
}

std::vector<int> block_sizes(const std::vector<Mat>& X) {
    std::vector<int> sizes;
    sizes.reserve(X.size());
    for (const Mat& x : X) sizes.push_back(static_cast<int>(x.rows()));
    return sizes;
}

/// Transposed copies so one data point is a contiguous column.
std::vector<Mat> transpose_inputs(const std::vector<Mat>& X) {
    std::vector<Mat> xt;
    xt.reserve(X.size());
    for (const Mat& x : X) xt.push_back(x.transpose());
    return xt;
}

int output_of_row(const CovarianceStructure& st, int g) {
    int q = 0;
    while (st.offset[q + 1] <= g) ++q;
    return q;
}

double entry_from_columns(const CovarianceStructure& st, int q, int s,
                          const double* a, const double* b) {
    double acc = 0;
    for (const PairTerm& t : st.terms(q, s)) {
        const double* w = t.w.data();
        double quad = 0;
        for (int d = 0; d < st.D; ++d) {
            const double delta = a[d] - b[d];
            quad += w[d] * delta * delta;
        }
        acc += t.amp * t.Sq * t.Ss * std::exp(-0.5 * quad);
    }
    return acc;
}

}  // namespace

Mat assemble_signal_covariance(const Hyperparameters& hp,
                               const std::vector<Mat>& X) {
    check_inputs(hp, X);
    const CovarianceStructure st = build_structure(hp, block_sizes(X));
    const std::vector<Mat> xt = transpose_inputs(X);
    const int n = st.total();
    Mat k(n, n);
    // Upper triangle by global row, mirrored immediately. Each (row, col)
    // pair is written by exactly one iteration, so threads never collide.
#pragma omp parallel for schedule(static, 1) num_threads(thread_count())
    for (int g = 0; g < n; ++g) {
        const int q = output_of_row(st, g);
        const double* a = xt[q].col(g - st.offset[q]).data();
        for (int s = q; s < st.Q; ++s) {
            const int j0 = s == q ? g - st.offset[s] : 0;
            const int ns = st.offset[s + 1] - st.offset[s];
            for (int j = j0; j < ns; ++j) {
                const double v =
                    entry_from_columns(st, q, s, a, xt[s].col(j).data());
                const int col = st.offset[s] + j;
                k(g, col) = v;
                k(col, g) = v;
            }
        }
    }
    return k;
}

namespace {

void add_noise_and_jitter(const Hyperparameters& hp,
                          const std::vector<int>& sizes, Mat& k,
                          double* base_jitter_out) {
    int g = 0;
    for (int q = 0; q < hp.Q; ++q) {
        const double noise = hp.sigma_w2(q);
        for (int i = 0; i < sizes[q]; ++i, ++g) k(g, g) += noise;
    }
    const double base = 1e-8 * k.diagonal().mean();
    k.diagonal().array() += base;
    if (base_jitter_out != nullptr) *base_jitter_out = base;
}

}  // namespace

Mat assemble_full_covariance(const Hyperparameters& hp,
                             const std::vector<Mat>& X,
                             double* base_jitter_out) {
    Mat k = assemble_signal_covariance(hp, X);
    add_noise_and_jitter(hp, block_sizes(X), k, base_jitter_out);
    return k;
}

Mat assemble_full_covariance_serial(const Hyperparameters& hp,
                                    const std::vector<Mat>& X,
                                    double* base_jitter_out) {
    check_inputs(hp, X);
    const std::vector<int> sizes = block_sizes(X);
    int n = 0;
    for (int sz : sizes) n += sz;
    Mat k(n, n);
    int row0 = 0;
    for (int q = 0; q < hp.Q; ++q) {
        int col0 = 0;
        for (int s = 0; s < hp.Q; ++s) {
            for (int i = 0; i < sizes[q]; ++i)
                for (int j = 0; j < sizes[s]; ++j)
                    k(row0 + i, col0 + j) = cross_covariance(
                        hp, q, s, X[q].row(i).transpose(),
                        X[s].row(j).transpose());
            col0 += sizes[s];
        }
        row0 += sizes[q];
    }
    add_noise_and_jitter(hp, sizes, k, base_jitter_out);
    return k;
}

namespace {

/// Shared body of the gradient accumulation. Adds the contribution of block
/// rows [i_begin, i_end) of output block (q, s) into grad.
void accumulate_block_rows(const Hyperparameters& hp,
                           const CovarianceStructure& st,
                           const ParamLayout& lay, const std::vector<Mat>& xt,
                           const Mat& asym, int q, int s, int i_begin,
                           int i_end, Vec& grad, Vec& d2) {
    const int ns = st.offset[s + 1] - st.offset[s];
    for (int i = i_begin; i < i_end; ++i) {
        const int gi = st.offset[q] + i;
        const double* a = xt[q].col(i).data();
        const int j0 = s == q ? i : 0;
        for (int j = j0; j < ns; ++j) {
            const int gj = st.offset[s] + j;
            // Each mirrored pair is visited once; the 1/2 in the gradient
            // cancels against the two symmetric occurrences, leaving weight
            // 1 off the diagonal and 1/2 on it.
            const double c = gi == gj ? 0.5 * asym(gi, gj) : asym(gi, gj);
            if (c == 0.0) continue;
            const double* b = xt[s].col(j).data();
            for (int d = 0; d < st.D; ++d) {
                const double delta = a[d] - b[d];
                d2(d) = delta * delta;
            }
            for (const PairTerm& t : st.terms(q, s)) {
                const double e = std::exp(-0.5 * t.w.dot(d2));
                const double value = t.amp * t.Sq * t.Ss * e;
                const double cv = c * value;
                grad(lay.s_idx[q * hp.R + t.r]) += c * t.amp * t.Ss * e;
                grad(lay.s_idx[s * hp.R + t.r]) += c * t.amp * t.Sq * e;
                grad(lay.u_idx[t.r]) += cv;
                auto gq = grad.segment(lay.ell_idx[q * hp.R + t.r], st.D);
                auto gs = grad.segment(lay.ell_idx[s * hp.R + t.r], st.D);
                for (int d = 0; d < st.D; ++d) {
                    const double dw = d2(d) * t.w(d);
                    gq(d) += cv * (1.0 - t.uq(d) + dw * t.uq(d));
                    gs(d) += cv * (1.0 - t.us(d) + dw * t.us(d));
                }
            }
        }
    }
}

void accumulate_noise_terms(const Hyperparameters& hp,
                            const CovarianceStructure& st, const ParamLayout& lay,
                            const Mat& asym, Vec& grad) {
    for (int q = 0; q < hp.Q; ++q) {
        double trace = 0;
        for (int g = st.offset[q]; g < st.offset[q + 1]; ++g)
            trace += asym(g, g);
        grad(lay.w_idx[q]) += 0.5 * trace * st.sigma_w2(q);
    }
}

/// Converts the accumulated raw-sensitivity derivatives into derivatives of
/// the packed vector, where S_qr = s'_qr exp(-log_sensitivity_scale(q, r)):
/// the sensitivity slot is rescaled and each of the pair's length-scale
/// slots picks up the amplitude's dependence on ell.
void to_packed_space(const Hyperparameters& hp, const ParamLayout& lay,
                     Vec& grad) {
    for (int q = 0; q < hp.Q; ++q)
        for (int r = 0; r < hp.R; ++r) {
            if (!hp.is_active(q, r)) continue;
            const double g_s = grad(lay.s_idx[q * hp.R + r]);
            grad.segment(lay.ell_idx[q * hp.R + r], hp.D).array() -=
                0.5 * hp.S(q, r) * g_s;
            grad(lay.s_idx[q * hp.R + r]) =
                g_s * std::exp(-hp.log_sensitivity_scale(q, r));
        }
}

}  // namespace

Vec accumulate_likelihood_gradient(const Hyperparameters& hp,
                                   const std::vector<Mat>& X,
                                   const Mat& asym) {
    check_inputs(hp, X);
    const CovarianceStructure st = build_structure(hp, block_sizes(X));
    const ParamLayout lay = make_layout(hp);
    const std::vector<Mat> xt = transpose_inputs(X);
    if (asym.rows() != st.total() || asym.cols() != st.total())
        throw ConfigError("gradient accumulation: matrix size mismatch");

    const int n_threads = thread_count();
    Mat partial = Mat::Zero(lay.n_params, n_threads);
#pragma omp parallel num_threads(n_threads)
    {
        const int tid = omp_get_thread_num();
        Vec local = Vec::Zero(lay.n_params);
        Vec d2(st.D);
        for (int q = 0; q < hp.Q; ++q)
            for (int s = q; s < hp.Q; ++s) {
                const int nq = st.offset[q + 1] - st.offset[q];
#pragma omp for schedule(static, 1)
                for (int i = 0; i < nq; ++i)
                    accumulate_block_rows(hp, st, lay, xt, asym, q, s, i,
                                          i + 1, local, d2);
            }
        partial.col(tid) = local;
    }
    // Merge per-thread sums in thread order so the result only depends on
    // the thread count, not on scheduling.
    Vec grad = Vec::Zero(lay.n_params);
    for (int t = 0; t < n_threads; ++t) grad += partial.col(t);
    accumulate_noise_terms(hp, st, lay, asym, grad);
    to_packed_space(hp, lay, grad);
    return grad;
}

Vec accumulate_likelihood_gradient_serial(const Hyperparameters& hp,
                                          const std::vector<Mat>& X,
                                          const Mat& asym) {
    check_inputs(hp, X);
    const CovarianceStructure st = build_structure(hp, block_sizes(X));
    const ParamLayout lay = make_layout(hp);
    const std::vector<Mat> xt = transpose_inputs(X);
    if (asym.rows() != st.total() || asym.cols() != st.total())
        throw ConfigError("gradient accumulation: matrix size mismatch");
    Vec grad = Vec::Zero(lay.n_params);
    Vec d2(st.D);
    for (int q = 0; q < hp.Q; ++q)
        for (int s = q; s < hp.Q; ++s) {
            const int nq = st.offset[q + 1] - st.offset[q];
            accumulate_block_rows(hp, st, lay, xt, asym, q, s, 0, nq, grad,
                                  d2);
        }
    accumulate_noise_terms(hp, st, lay, asym, grad);
    to_packed_space(hp, lay, grad);
    return grad;
}

}  // namespace auvgp
