#include "isac/conic.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>
#include <cstdio>

// Primal-dual path-following solver for
//     minimize q.x  s.t.  A x = b,  G x + s = h,  s in K,
// K a product of nonnegative, second-order, and PSD (svec) cones. Mehrotra
// predictor-corrector steps with Nesterov-Todd scaling; the KKT system is
// reduced to two dense Cholesky factorizations per iteration with static
// regularization and iterative refinement. Everything is deterministic:
// fixed initialization, no randomization.

namespace isac::conic {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kStaticReg = 1e-10;
constexpr double kStepDamp = 0.99;

struct ConeLayout {
    int nonneg = 0;
    std::vector<int> soc_dims;
    std::vector<int> psd_dims;   // matrix dimensions
    std::vector<int> offsets_soc;
    std::vector<int> offsets_psd;
    int total = 0;
    double degree = 0.0;

    void finalize() {
        int off = nonneg;
        degree = nonneg;
        offsets_soc.clear();
        offsets_psd.clear();
        for (int d : soc_dims) {
            offsets_soc.push_back(off);
            off += d;
            degree += 1.0;
        }
        for (int d : psd_dims) {
            offsets_psd.push_back(off);
            off += svec_dim(d);
            degree += d;
        }
        total = off;
    }
};

// Nesterov-Todd scaling data per cone family.
struct Scaling {
    Eigen::ArrayXd w_nn;  // sqrt(s/z)
    struct Soc {
        double eta = 1.0;
        Eigen::VectorXd wbar;  // hyperbolic-unit scaling point
    };
    std::vector<Soc> socs;
    struct Psd {
        Eigen::MatrixXd r;     // T = r r^T satisfies T Z T = S
        Eigen::MatrixXd rinv;
    };
    std::vector<Psd> psds;
    Eigen::VectorXd lambda;  // scaled point W z = W^{-T} s
};

Eigen::VectorXd cone_identity(const ConeLayout& L) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(L.total);
    e.head(L.nonneg).setOnes();
    for (std::size_t i = 0; i < L.soc_dims.size(); ++i) e(L.offsets_soc[i]) = 1.0;
    for (std::size_t i = 0; i < L.psd_dims.size(); ++i) {
        const int d = L.psd_dims[i];
        int idx = L.offsets_psd[i];
        for (int c = 0; c < d; ++c) {
            e(idx) = 1.0;
            idx += d - c;
        }
    }
    return e;
}

// Smallest spectral value of a cone vector (eigenvalue in the Jordan algebra).
double min_spectral(const ConeLayout& L, const Eigen::VectorXd& v) {
    double lo = kInf;
    if (L.nonneg > 0) lo = std::min(lo, v.head(L.nonneg).minCoeff());
    for (std::size_t i = 0; i < L.soc_dims.size(); ++i) {
        const int d = L.soc_dims[i];
        const int o = L.offsets_soc[i];
        lo = std::min(lo, v(o) - v.segment(o + 1, d - 1).norm());
    }
    for (std::size_t i = 0; i < L.psd_dims.size(); ++i) {
        const int d = L.psd_dims[i];
        const Eigen::MatrixXd M = smat(v.segment(L.offsets_psd[i], svec_dim(d)), d);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
        lo = std::min(lo, es.eigenvalues().minCoeff());
    }
    return lo;
}

// Jordan product u o v per cone.
Eigen::VectorXd jordan_product(const ConeLayout& L, const Eigen::VectorXd& u,
                               const Eigen::VectorXd& v) {
    Eigen::VectorXd out(L.total);
    out.head(L.nonneg) = u.head(L.nonneg).cwiseProduct(v.head(L.nonneg));
    for (std::size_t i = 0; i < L.soc_dims.size(); ++i) {
        const int d = L.soc_dims[i];
        const int o = L.offsets_soc[i];
        out(o) = u.segment(o, d).dot(v.segment(o, d));
        out.segment(o + 1, d - 1) =
            u(o) * v.segment(o + 1, d - 1) + v(o) * u.segment(o + 1, d - 1);
    }
    for (std::size_t i = 0; i < L.psd_dims.size(); ++i) {
        const int d = L.psd_dims[i];
        const int o = L.offsets_psd[i];
        const Eigen::MatrixXd U = smat(u.segment(o, svec_dim(d)), d);
        const Eigen::MatrixXd V = smat(v.segment(o, svec_dim(d)), d);
        out.segment(o, svec_dim(d)) = svec(0.5 * (U * V + V * U));
    }
    return out;
}

// Solves lambda o x = u for x.
Eigen::VectorXd jordan_division(const ConeLayout& L, const Eigen::VectorXd& lambda,
                                const Eigen::VectorXd& u) {
    Eigen::VectorXd out(L.total);
    out.head(L.nonneg) = u.head(L.nonneg).cwiseQuotient(lambda.head(L.nonneg));
    for (std::size_t i = 0; i < L.soc_dims.size(); ++i) {
        const int d = L.soc_dims[i];
        const int o = L.offsets_soc[i];
        const double l0 = lambda(o);
        const auto l1 = lambda.segment(o + 1, d - 1);
        const double det = l0 * l0 - l1.squaredNorm();
        const double x0 = (l0 * u(o) - l1.dot(u.segment(o + 1, d - 1))) / det;
        out(o) = x0;
        out.segment(o + 1, d - 1) = (u.segment(o + 1, d - 1) - x0 * l1) / l0;
    }
    for (std::size_t i = 0; i < L.psd_dims.size(); ++i) {
        const int d = L.psd_dims[i];
        const int o = L.offsets_psd[i];
        const Eigen::MatrixXd Lm = smat(lambda.segment(o, svec_dim(d)), d);
        const Eigen::MatrixXd U = smat(u.segment(o, svec_dim(d)), d);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Lm);
        const Eigen::MatrixXd Ut = es.eigenvectors().transpose() * U * es.eigenvectors();
        Eigen::MatrixXd Xt(d, d);
        for (int r = 0; r < d; ++r) {
            for (int c = 0; c < d; ++c) {
                Xt(r, c) = 2.0 * Ut(r, c) / (es.eigenvalues()(r) + es.eigenvalues()(c));
            }
        }
        out.segment(o, svec_dim(d)) =
            svec(es.eigenvectors() * Xt * es.eigenvectors().transpose());
    }
    return out;
}

bool compute_scaling(const ConeLayout& L, const Eigen::VectorXd& s, const Eigen::VectorXd& z,
                     Scaling& sc) {
    sc.w_nn = (s.head(L.nonneg).array() / z.head(L.nonneg).array()).sqrt();
    if (!sc.w_nn.allFinite()) return false;

    sc.socs.resize(L.soc_dims.size());
    for (std::size_t i = 0; i < L.soc_dims.size(); ++i) {
        const int d = L.soc_dims[i];
        const int o = L.offsets_soc[i];
        // floored against roundoff right at the cone boundary
        const double sres = std::max(s(o) * s(o) - s.segment(o + 1, d - 1).squaredNorm(),
                                     1e-16 * s(o) * s(o));
        const double zres = std::max(z(o) * z(o) - z.segment(o + 1, d - 1).squaredNorm(),
                                     1e-16 * z(o) * z(o));
        if (sres <= 0.0 || zres <= 0.0) return false;
        const double snorm = std::sqrt(sres);
        const double znorm = std::sqrt(zres);
        Eigen::VectorXd sbar = s.segment(o, d) / snorm;
        Eigen::VectorXd zbar = z.segment(o, d) / znorm;
        const double gamma = std::sqrt(0.5 * (1.0 + sbar.dot(zbar)));
        Eigen::VectorXd wbar(d);
        wbar(0) = (0.5 / gamma) * (sbar(0) + zbar(0));
        wbar.tail(d - 1) = (0.5 / gamma) * (sbar.tail(d - 1) - zbar.tail(d - 1));
        sc.socs[i].eta = std::sqrt(snorm / znorm);
        sc.socs[i].wbar = wbar;
    }

    sc.psds.resize(L.psd_dims.size());
    for (std::size_t i = 0; i < L.psd_dims.size(); ++i) {
        const int d = L.psd_dims[i];
        const int o = L.offsets_psd[i];
        const Eigen::MatrixXd S = smat(s.segment(o, svec_dim(d)), d);
        const Eigen::MatrixXd Z = smat(z.segment(o, svec_dim(d)), d);
        // Factor via eigendecompositions with a relative eigenvalue floor:
        // blocks go rank-deficient as rank-one optima are approached and a
        // plain Cholesky starts failing well before convergence.
        auto factor_psd = [](const Eigen::MatrixXd& M) -> Eigen::MatrixXd {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
            const double floor = std::max(1e-14 * es.eigenvalues().maxCoeff(), 1e-300);
            return es.eigenvectors() *
                   es.eigenvalues().cwiseMax(floor).cwiseSqrt().asDiagonal();
        };
        const Eigen::MatrixXd Ls = factor_psd(S);
        const Eigen::MatrixXd Lz = factor_psd(Z);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(Lz.transpose() * Ls,
                                              Eigen::ComputeFullU | Eigen::ComputeFullV);
        const Eigen::VectorXd sig_isqrt = svd.singularValues().cwiseSqrt().cwiseInverse();
        if (!sig_isqrt.allFinite()) return false;
        // r = Ls V Sigma^{-1/2}; rinv = Sigma^{-1/2} U^T Lz^T
        sc.psds[i].r = Ls * svd.matrixV() * sig_isqrt.asDiagonal();
        sc.psds[i].rinv = sig_isqrt.asDiagonal() * svd.matrixU().transpose() * Lz.transpose();
    }
    return true;
}

enum class ScaleOp { W, WT, Winv, WinvT };

// Applies the NT scaling operator (or its transpose / inverse) per cone.
Eigen::VectorXd apply_scaling(const ConeLayout& L, const Scaling& sc, ScaleOp op,
                              const Eigen::VectorXd& v) {
    Eigen::VectorXd out(L.total);
    if (op == ScaleOp::W || op == ScaleOp::WT) {
        out.head(L.nonneg) = v.head(L.nonneg).array() * sc.w_nn;
    } else {
        out.head(L.nonneg) = v.head(L.nonneg).array() / sc.w_nn;
    }
    for (std::size_t i = 0; i < L.soc_dims.size(); ++i) {
        const int d = L.soc_dims[i];
        const int o = L.offsets_soc[i];
        const auto& w = sc.socs[i].wbar;
        const double w0 = w(0);
        const auto w1 = w.tail(d - 1);
        const auto v0 = v(o);
        const auto v1 = v.segment(o + 1, d - 1);
        // Wbar and its inverse differ only by the sign of w1.
        const double sgn = (op == ScaleOp::W || op == ScaleOp::WT) ? 1.0 : -1.0;
        const double scale = (op == ScaleOp::W || op == ScaleOp::WT)
                                 ? sc.socs[i].eta
                                 : 1.0 / sc.socs[i].eta;
        const double dot = w1.dot(v1);
        out(o) = scale * (w0 * v0 + sgn * dot);
        out.segment(o + 1, d - 1) =
            scale * (sgn * v0 * w1 + v1 + (dot / (1.0 + w0)) * w1);
    }
    for (std::size_t i = 0; i < L.psd_dims.size(); ++i) {
        const int d = L.psd_dims[i];
        const int o = L.offsets_psd[i];
        const Eigen::MatrixXd V = smat(v.segment(o, svec_dim(d)), d);
        const auto& r = sc.psds[i].r;
        const auto& rinv = sc.psds[i].rinv;
        Eigen::MatrixXd M;
        switch (op) {
            case ScaleOp::W: M = r.transpose() * V * r; break;
            case ScaleOp::WT: M = r * V * r.transpose(); break;
            case ScaleOp::Winv: M = rinv.transpose() * V * rinv; break;
            case ScaleOp::WinvT: M = rinv * V * rinv.transpose(); break;
        }
        out.segment(o, svec_dim(d)) = svec(0.5 * (M + M.transpose()));
    }
    return out;
}

// W^T W v (used for KKT residual refinement).
Eigen::VectorXd apply_w2(const ConeLayout& L, const Scaling& sc, const Eigen::VectorXd& v) {
    return apply_scaling(L, sc, ScaleOp::WT, apply_scaling(L, sc, ScaleOp::W, v));
}

// Smallest positive root of a*t^2 + b*t + c with c > 0; +inf when none.
double smallest_positive_root(double a, double b, double c) {
    if (std::abs(a) < 1e-300) {
        return b < 0.0 ? -c / b : kInf;
    }
    const double disc = b * b - 4.0 * a * c;
    if (a > 0.0) {
        if (disc < 0.0 || b >= 0.0) return kInf;
        return 2.0 * c / (-b + std::sqrt(disc));
    }
    // a < 0: roots have opposite signs; pick the positive one stably.
    const double sq = std::sqrt(std::max(0.0, disc));
    const double qq = -0.5 * (b + (b >= 0.0 ? sq : -sq));
    const double r1 = qq / a;
    const double r2 = (qq != 0.0) ? c / qq : kInf;
    double best = kInf;
    if (r1 > 0.0) best = std::min(best, r1);
    if (r2 > 0.0) best = std::min(best, r2);
    return best;
}

// Largest step alpha with lam + alpha * d staying in the cone (lam interior).
double max_step(const ConeLayout& L, const Eigen::VectorXd& lam, const Eigen::VectorXd& d) {
    double alpha = kInf;
    for (int i = 0; i < L.nonneg; ++i) {
        if (d(i) < 0.0) alpha = std::min(alpha, -lam(i) / d(i));
    }
    for (std::size_t i = 0; i < L.soc_dims.size(); ++i) {
        const int dim = L.soc_dims[i];
        const int o = L.offsets_soc[i];
        const double a = d(o) * d(o) - d.segment(o + 1, dim - 1).squaredNorm();
        const double b =
            2.0 * (lam(o) * d(o) - lam.segment(o + 1, dim - 1).dot(d.segment(o + 1, dim - 1)));
        const double c = lam(o) * lam(o) - lam.segment(o + 1, dim - 1).squaredNorm();
        alpha = std::min(alpha, smallest_positive_root(a, b, c));
    }
    for (std::size_t i = 0; i < L.psd_dims.size(); ++i) {
        const int dim = L.psd_dims[i];
        const int o = L.offsets_psd[i];
        const Eigen::MatrixXd Lm = smat(lam.segment(o, svec_dim(dim)), dim);
        const Eigen::MatrixXd D = smat(d.segment(o, svec_dim(dim)), dim);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> lam_es(Lm);
        const double floor = std::max(1e-14 * lam_es.eigenvalues().maxCoeff(), 1e-300);
        const Eigen::MatrixXd Linv =
            lam_es.eigenvalues().cwiseMax(floor).cwiseSqrt().cwiseInverse().asDiagonal() *
            lam_es.eigenvectors().transpose();
        const Eigen::MatrixXd M = Linv * D * Linv.transpose();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()),
                                                          Eigen::EigenvaluesOnly);
        const double lo = es.eigenvalues().minCoeff();
        if (lo < 0.0) alpha = std::min(alpha, -1.0 / lo);
    }
    return alpha;
}

struct InternalForm {
    Eigen::VectorXd q;
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    Eigen::MatrixXd G;
    Eigen::VectorXd h;
    ConeLayout layout;
    int n = 0;
    int me = 0;
};

InternalForm build_internal(const ConicProblem& p) {
    InternalForm f;
    f.n = p.num_vars();
    if (f.n <= 0) throw std::invalid_argument("conic solve: problem has no variables");
    if (p.objective.size() != f.n) throw std::invalid_argument("conic solve: objective size mismatch");
    f.q = -p.objective;

    f.me = static_cast<int>(p.eq_rhs.size());
    f.A = p.eq_coeffs.rows() > 0 ? p.eq_coeffs : Eigen::MatrixXd::Zero(0, f.n);
    if (f.A.rows() != f.me || (f.me > 0 && f.A.cols() != f.n)) {
        throw std::invalid_argument("conic solve: equality dimensions mismatch");
    }
    f.b = p.eq_rhs;

    f.layout.nonneg = static_cast<int>(p.ineq_rhs.size());
    for (const auto& c : p.socs) f.layout.soc_dims.push_back(static_cast<int>(c.u_const.size()) + 1);
    f.layout.psd_dims = p.psd_dims;
    f.layout.finalize();
    if (f.layout.total == 0) throw std::invalid_argument("conic solve: no conic constraints");

    f.G = Eigen::MatrixXd::Zero(f.layout.total, f.n);
    f.h = Eigen::VectorXd::Zero(f.layout.total);
    if (f.layout.nonneg > 0) {
        if (p.ineq_coeffs.cols() != f.n) {
            throw std::invalid_argument("conic solve: inequality dimensions mismatch");
        }
        f.G.topRows(f.layout.nonneg) = p.ineq_coeffs;
        f.h.head(f.layout.nonneg) = p.ineq_rhs;
    }
    for (std::size_t i = 0; i < p.socs.size(); ++i) {
        const auto& c = p.socs[i];
        const int o = f.layout.offsets_soc[i];
        const int du = static_cast<int>(c.u_const.size());
        if (c.t_coeffs.size() != f.n || c.u_coeffs.cols() != f.n || c.u_coeffs.rows() != du) {
            throw std::invalid_argument("conic solve: SOC dimensions mismatch");
        }
        f.G.row(o) = -c.t_coeffs.transpose();
        f.G.block(o + 1, 0, du, f.n) = -c.u_coeffs;
        f.h(o) = c.t_const;
        f.h.segment(o + 1, du) = c.u_const;
    }
    for (std::size_t i = 0; i < p.psd_dims.size(); ++i) {
        const int o = f.layout.offsets_psd[i];
        const int v = svec_dim(p.psd_dims[i]);
        f.G.block(o, p.psd_offset(static_cast<int>(i)), v, v) =
            -Eigen::MatrixXd::Identity(v, v);
    }
    return f;
}

// Newton-system solver with two modes. The fast path reduces to normal
// equations H = G^T (W^T W)^{-1} G plus a Schur complement over the equality
// block; it is cheap but squares the scaling's condition number, which breaks
// down once the iterates approach the cone boundary. The exact path factors
// the full augmented KKT matrix with partially pivoted LU, which stays
// accurate there at ~4x the cost. The driver switches to the exact path when
// the fast path's refinement residuals stop contracting.
class KktSolver {
  public:
    KktSolver(const InternalForm& f) : f_(f) {}

    void set_full_mode(bool on) { full_mode_ = on; }
    bool full_mode() const { return full_mode_; }
    double last_residual() const { return last_residual_; }

    bool factor(const Scaling* sc) {
        if (!full_mode_) {
            if (factor_fast(sc)) return true;
            full_mode_ = true;  // Cholesky lost definiteness; use the exact path
        }
        return factor_full(sc);
    }

    bool factor_fast(const Scaling* sc) {
        const int n = f_.n;
        kinv_nn_.resize(f_.layout.nonneg);
        if (sc) {
            kinv_nn_ = (1.0 / (sc->w_nn * sc->w_nn)).matrix();
        } else {
            kinv_nn_.setOnes();
        }
        kinv_soc_.clear();
        for (std::size_t i = 0; i < f_.layout.soc_dims.size(); ++i) {
            const int d = f_.layout.soc_dims[i];
            Eigen::MatrixXd Kinv;
            if (sc) {
                const auto& w = sc->socs[i].wbar;
                Eigen::VectorXd jw(d);
                jw(0) = w(0);
                jw.tail(d - 1) = -w.tail(d - 1);
                Eigen::MatrixXd J = -Eigen::MatrixXd::Identity(d, d);
                J(0, 0) = 1.0;
                Kinv = (2.0 * jw * jw.transpose() - J) / (sc->socs[i].eta * sc->socs[i].eta);
            } else {
                Kinv = Eigen::MatrixXd::Identity(d, d);
            }
            kinv_soc_.push_back(std::move(Kinv));
        }
        kinv_psd_.clear();
        for (std::size_t i = 0; i < f_.layout.psd_dims.size(); ++i) {
            const int d = f_.layout.psd_dims[i];
            const int v = svec_dim(d);
            Eigen::MatrixXd Kinv(v, v);
            if (sc) {
                const Eigen::MatrixXd tinv =
                    sc->psds[i].rinv.transpose() * sc->psds[i].rinv;  // T^{-1}
                for (int j = 0; j < v; ++j) {
                    Eigen::VectorXd ej = Eigen::VectorXd::Zero(v);
                    ej(j) = 1.0;
                    const Eigen::MatrixXd Ej = smat(ej, d);
                    Kinv.col(j) = svec(tinv * Ej * tinv);
                }
                Kinv = 0.5 * (Kinv + Kinv.transpose());
            } else {
                Kinv.setIdentity();
            }
            kinv_psd_.push_back(std::move(Kinv));
        }

        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
        if (f_.layout.nonneg > 0) {
            const auto Gi = f_.G.topRows(f_.layout.nonneg);
            H.noalias() = Gi.transpose() * kinv_nn_.asDiagonal() * Gi;
        }
        for (std::size_t i = 0; i < f_.layout.soc_dims.size(); ++i) {
            const int d = f_.layout.soc_dims[i];
            const auto Gs = f_.G.block(f_.layout.offsets_soc[i], 0, d, n);
            H.noalias() += Gs.transpose() * kinv_soc_[i] * Gs;
        }
        for (std::size_t i = 0; i < f_.layout.psd_dims.size(); ++i) {
            const int v = svec_dim(f_.layout.psd_dims[i]);
            // con: identity rows onto the block's own variables
            const int voff = var_offset_psd(i);
            H.block(voff, voff, v, v) += kinv_psd_[i];
        }
        H.diagonal().array() += kStaticReg;

        llt_h_.compute(H);
        if (llt_h_.info() != Eigen::Success) return false;
        if (f_.me > 0) {
            const Eigen::MatrixXd HinvAt = llt_h_.solve(f_.A.transpose());
            Eigen::MatrixXd S = f_.A * HinvAt;
            S.diagonal().array() += kStaticReg;
            llt_s_.compute(S);
            if (llt_s_.info() != Eigen::Success) return false;
        }
        return true;
    }

    // Solves the scaled Newton system
    //   A^T dy + G^T dz = r1;  A dx = r2;  G dx - W^T W dz = r3
    // with refinement sweeps against the unregularized operator. Records the
    // final relative residual so the driver can escalate to the exact path.
    void solve(const Scaling* sc, const Eigen::VectorXd& r1, const Eigen::VectorXd& r2,
               const Eigen::VectorXd& r3, Eigen::VectorXd& dx, Eigen::VectorXd& dy,
               Eigen::VectorXd& dz) {
        dx = Eigen::VectorXd::Zero(f_.n);
        dy = Eigen::VectorXd::Zero(f_.me);
        dz = Eigen::VectorXd::Zero(f_.layout.total);
        const double rhs_scale =
            1.0 + r1.norm() + (r2.size() ? r2.norm() : 0.0) + r3.norm();
        Eigen::VectorXd e1 = r1, e2 = r2, e3 = r3;
        double err = 0.0;
        for (int sweep = 0; sweep < 4; ++sweep) {
            Eigen::VectorXd cx, cy, cz;
            solve_once(e1, e2, e3, cx, cy, cz);
            dx += cx;
            dy += cy;
            dz += cz;
            // residual of the unregularized system
            e1 = r1 - f_.G.transpose() * dz;
            if (f_.me > 0) e1 -= f_.A.transpose() * dy;
            e2 = f_.me > 0 ? (r2 - f_.A * dx).eval() : Eigen::VectorXd();
            e3 = r3 - f_.G * dx + apply_w2_direct(sc, dz);
            err = (e1.norm() + (e2.size() ? e2.norm() : 0.0) + e3.norm()) / rhs_scale;
            if (err < 1e-13) break;
        }
        last_residual_ = err;
    }

    Eigen::VectorXd apply_kinv(const Eigen::VectorXd& v) const {
        Eigen::VectorXd out(f_.layout.total);
        out.head(f_.layout.nonneg) =
            kinv_nn_.asDiagonal() * v.head(f_.layout.nonneg);
        for (std::size_t i = 0; i < f_.layout.soc_dims.size(); ++i) {
            const int d = f_.layout.soc_dims[i];
            out.segment(f_.layout.offsets_soc[i], d) =
                kinv_soc_[i] * v.segment(f_.layout.offsets_soc[i], d);
        }
        for (std::size_t i = 0; i < f_.layout.psd_dims.size(); ++i) {
            const int sv = svec_dim(f_.layout.psd_dims[i]);
            out.segment(f_.layout.offsets_psd[i], sv) =
                kinv_psd_[i] * v.segment(f_.layout.offsets_psd[i], sv);
        }
        return out;
    }

  private:
    int var_offset_psd(std::size_t block) const {
        int off = f_.n;
        // PSD variables sit at the tail of the packed vector in declaration
        // order; recompute the offset from the right.
        for (std::size_t j = f_.layout.psd_dims.size(); j-- > block;) {
            off -= svec_dim(f_.layout.psd_dims[j]);
        }
        return off;
    }

    // W^T W v, applied through the scaling factors (accurate even when the
    // materialized matrix would be ill-conditioned).
    Eigen::VectorXd apply_w2_direct(const Scaling* sc, const Eigen::VectorXd& v) const {
        if (!sc) return v;
        return apply_w2(f_.layout, *sc, v);
    }

    // Materializes W^T W per cone for the augmented KKT matrix.
    Eigen::MatrixXd materialize_w2(const Scaling* sc) const {
        const ConeLayout& L = f_.layout;
        Eigen::MatrixXd W2 = Eigen::MatrixXd::Identity(L.total, L.total);
        if (!sc) return W2;
        for (int i = 0; i < L.nonneg; ++i) W2(i, i) = sc->w_nn(i) * sc->w_nn(i);
        for (std::size_t i = 0; i < L.soc_dims.size(); ++i) {
            const int d = L.soc_dims[i];
            const auto& w = sc->socs[i].wbar;
            Eigen::MatrixXd J = -Eigen::MatrixXd::Identity(d, d);
            J(0, 0) = 1.0;
            const double eta2 = sc->socs[i].eta * sc->socs[i].eta;
            W2.block(L.offsets_soc[i], L.offsets_soc[i], d, d) =
                eta2 * (2.0 * w * w.transpose() - J);
        }
        for (std::size_t i = 0; i < L.psd_dims.size(); ++i) {
            const int d = L.psd_dims[i];
            const int v = svec_dim(d);
            const Eigen::MatrixXd T = sc->psds[i].r * sc->psds[i].r.transpose();
            Eigen::MatrixXd blk(v, v);
            for (int j = 0; j < v; ++j) {
                Eigen::VectorXd ej = Eigen::VectorXd::Zero(v);
                ej(j) = 1.0;
                blk.col(j) = svec(T * smat(ej, d) * T);
            }
            W2.block(L.offsets_psd[i], L.offsets_psd[i], v, v) = 0.5 * (blk + blk.transpose());
        }
        return W2;
    }

    bool factor_full(const Scaling* sc) {
        const int n = f_.n;
        const int me = f_.me;
        const int mc = f_.layout.total;
        const int dim = n + me + mc;
        full_kkt_.setZero(dim, dim);
        if (me > 0) {
            full_kkt_.block(n, 0, me, n) = f_.A;
            full_kkt_.block(0, n, n, me) = f_.A.transpose();
        }
        full_kkt_.block(n + me, 0, mc, n) = f_.G;
        full_kkt_.block(0, n + me, n, mc) = f_.G.transpose();
        full_kkt_.block(n + me, n + me, mc, mc) = -materialize_w2(sc);
        lu_full_.compute(full_kkt_);
        return true;
    }

    void solve_once(const Eigen::VectorXd& r1, const Eigen::VectorXd& r2,
                    const Eigen::VectorXd& r3, Eigen::VectorXd& dx, Eigen::VectorXd& dy,
                    Eigen::VectorXd& dz) const {
        if (full_mode_) {
            const int n = f_.n;
            const int me = f_.me;
            const int mc = f_.layout.total;
            Eigen::VectorXd rhs(n + me + mc);
            rhs.head(n) = r1;
            if (me > 0) rhs.segment(n, me) = r2;
            rhs.tail(mc) = r3;
            const Eigen::VectorXd d = lu_full_.solve(rhs);
            dx = d.head(n);
            dy = me > 0 ? d.segment(n, me).eval() : Eigen::VectorXd();
            dz = d.tail(mc);
            return;
        }
        const Eigen::VectorXd r1p = r1 + f_.G.transpose() * apply_kinv(r3);
        if (f_.me > 0) {
            const Eigen::VectorXd rhs = f_.A * llt_h_.solve(r1p) - r2;
            dy = llt_s_.solve(rhs);
            dx = llt_h_.solve(r1p - f_.A.transpose() * dy);
        } else {
            dy.resize(0);
            dx = llt_h_.solve(r1p);
        }
        dz = apply_kinv(f_.G * dx - r3);
    }

    const InternalForm& f_;
    bool full_mode_ = false;
    double last_residual_ = 0.0;
    Eigen::VectorXd kinv_nn_;
    std::vector<Eigen::MatrixXd> kinv_soc_;
    std::vector<Eigen::MatrixXd> kinv_psd_;
    Eigen::LLT<Eigen::MatrixXd> llt_h_;
    Eigen::LLT<Eigen::MatrixXd> llt_s_;
    Eigen::MatrixXd full_kkt_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_full_;
};

// Shifts a vector into the cone interior along the identity element.
Eigen::VectorXd shift_into_cone(const ConeLayout& L, const Eigen::VectorXd& v) {
    const double lo = min_spectral(L, v);
    if (lo > 1e-8) return v;
    return v + (1.0 - lo) * cone_identity(L);
}

}  // namespace

ConicSolution solve(const ConicProblem& p, const SolverSettings& settings) {
    if (settings.tol < 1e-10 || settings.tol > 1e-4) {
        throw std::invalid_argument("conic solve: tol must lie in [1e-10, 1e-4]");
    }
    const InternalForm f = build_internal(p);
    const ConeLayout& L = f.layout;
    const double tol = settings.tol;

    KktSolver kkt(f);
    if (!kkt.factor(nullptr)) throw std::runtime_error("conic solve: initialization factorization failed");

    // Deterministic start: least-squares primal/dual points, shifted interior.
    Eigen::VectorXd x, y, z, s;
    {
        Eigen::VectorXd dx, dy, dz;
        kkt.solve(nullptr, Eigen::VectorXd::Zero(f.n), f.b, f.h, dx, dy, dz);
        x = dx;
        if (settings.x0) {
            if (settings.x0->size() != f.n) {
                throw std::invalid_argument("conic solve: x0 size mismatch");
            }
            x = *settings.x0;
        }
        s = shift_into_cone(L, f.h - f.G * x);

        kkt.solve(nullptr, -f.q, Eigen::VectorXd::Zero(f.me), Eigen::VectorXd::Zero(L.total), dx,
                  dy, dz);
        y = dy;
        z = shift_into_cone(L, dz);
    }

    ConicSolution sol;
    sol.x = x;

    const double bnorm = std::max(1.0, f.b.size() ? f.b.norm() : 0.0);
    const double hnorm = std::max(1.0, f.h.norm());
    const double qnorm = std::max(1.0, f.q.norm());

    // Best iterate by combined merit; returned if full accuracy is never hit.
    double best_merit = kInf;
    int best_it = 0;
    ConicSolution best = sol;

    Scaling sc;
    int it = 0;
    for (; it < settings.max_iters; ++it) {
        const double gap = s.dot(z);
        const double mu = gap / L.degree;

        Eigen::VectorXd rx = f.q + f.G.transpose() * z;
        if (f.me > 0) rx += f.A.transpose() * y;
        const Eigen::VectorXd ry = f.me > 0 ? (f.A * x - f.b).eval() : Eigen::VectorXd();
        const Eigen::VectorXd rz = f.G * x + s - f.h;

        const double pcost = f.q.dot(x);
        const double dcost = -(f.me > 0 ? f.b.dot(y) : 0.0) - f.h.dot(z);
        const double pres = std::max(f.me > 0 ? ry.norm() / bnorm : 0.0, rz.norm() / hnorm);
        const double dres = rx.norm() / qnorm;

        sol.x = x;
        sol.objective = -pcost;
        sol.kkt = {pres, dres, gap};
        sol.iterations = it;

#ifdef ISAC_CONIC_DEBUG
        std::fprintf(stderr, "it=%d pres=%.3e dres=%.3e gap=%.3e pcost=%.6e dcost=%.6e full=%d\n",
                     it, pres, dres, gap, pcost, dcost, int(kkt.full_mode()));
#endif

        const double merit = std::max({pres, dres, gap / (1.0 + std::abs(pcost))});
        if (merit < best_merit) {
            best_merit = merit;
            best_it = it;
            best = sol;
        }

        const bool gap_ok = gap <= tol * (1.0 + std::abs(pcost)) ||
                            std::abs(pcost - dcost) <= tol * (1.0 + std::abs(pcost));
        if (pres <= tol && dres <= tol && gap_ok) {
            sol.status = SolveStatus::Optimal;
            return sol;
        }

        // No measurable progress for a while: accept the best point seen.
        if (it - best_it > 8) break;

        // Primal infeasibility certificate: A^T y + G^T z ~ 0 with b.y + h.z < 0.
        const double cert = (f.me > 0 ? f.b.dot(y) : 0.0) + f.h.dot(z);
        if (cert < 0.0) {
            Eigen::VectorXd ray = f.G.transpose() * z;
            if (f.me > 0) ray += f.A.transpose() * y;
            if (ray.norm() <= tol * (-cert)) {
                sol.status = SolveStatus::Infeasible;
                return sol;
            }
        }

        if (!compute_scaling(L, s, z, sc)) {
#ifdef ISAC_CONIC_DEBUG
            std::fprintf(stderr, "      break: scaling failed\n");
#endif
            break;
        }
        if (!kkt.factor(&sc)) {
#ifdef ISAC_CONIC_DEBUG
            std::fprintf(stderr, "      break: factorization failed\n");
#endif
            break;
        }
        const Eigen::VectorXd lambda = apply_scaling(L, sc, ScaleOp::W, z);

        // Affine (predictor) direction.
        Eigen::VectorXd dxa, dya, dza;
        kkt.solve(&sc, -rx, f.me > 0 ? (-ry).eval() : Eigen::VectorXd(), -rz + s, dxa, dya, dza);
        if (!kkt.full_mode() && kkt.last_residual() > 1e-11) {
            // Fast path lost accuracy; redo this iteration on the exact path.
            kkt.set_full_mode(true);
            kkt.factor(&sc);
            kkt.solve(&sc, -rx, f.me > 0 ? (-ry).eval() : Eigen::VectorXd(), -rz + s, dxa, dya,
                      dza);
        }
        const Eigen::VectorXd dsa = -(s + apply_w2(L, sc, dza));

        const Eigen::VectorXd dsa_sc = apply_scaling(L, sc, ScaleOp::WinvT, dsa);
        const Eigen::VectorXd dza_sc = apply_scaling(L, sc, ScaleOp::W, dza);
        const double alpha_aff =
            std::min({1.0, max_step(L, lambda, dsa_sc), max_step(L, lambda, dza_sc)});

        const double gap_aff = (s + alpha_aff * dsa).dot(z + alpha_aff * dza);
        double sigma = std::pow(std::max(0.0, gap_aff / gap), 3);
        sigma = std::min(1.0, std::max(0.0, sigma));

        // Combined (corrector) direction.
        Eigen::VectorXd d_s = jordan_product(L, lambda, lambda) +
                              jordan_product(L, dsa_sc, dza_sc) -
                              sigma * mu * cone_identity(L);
        const Eigen::VectorXd u = jordan_division(L, lambda, d_s);
        Eigen::VectorXd dx, dy, dz;
        kkt.solve(&sc, -rx, f.me > 0 ? (-ry).eval() : Eigen::VectorXd(),
                  -rz + apply_scaling(L, sc, ScaleOp::WT, u), dx, dy, dz);
        const Eigen::VectorXd ds =
            -(apply_scaling(L, sc, ScaleOp::WT, u) + apply_w2(L, sc, dz));

        const Eigen::VectorXd ds_sc = apply_scaling(L, sc, ScaleOp::WinvT, ds);
        const Eigen::VectorXd dz_sc = apply_scaling(L, sc, ScaleOp::W, dz);
        const double alpha =
            std::min({1.0, kStepDamp * max_step(L, lambda, ds_sc),
                      kStepDamp * max_step(L, lambda, dz_sc)});
        if (!std::isfinite(alpha) || alpha <= 0.0) {
#ifdef ISAC_CONIC_DEBUG
            std::fprintf(stderr, "      break: alpha=%.3e\n", alpha);
#endif
            break;
        }

#ifdef ISAC_CONIC_DEBUG
        std::fprintf(stderr, "      alpha_aff=%.3e sigma=%.3e alpha=%.3e\n", alpha_aff, sigma,
                     alpha);
#endif
        x += alpha * dx;
        if (f.me > 0) y += alpha * dy;
        z += alpha * dz;
        s += alpha * ds;
        if (!x.allFinite() || !s.allFinite() || !z.allFinite()) break;
    }

    best.status = SolveStatus::MaxIters;
    best.iterations = it;
    return best;
}

ConicSolution solve(const ConicProblem& p, double tol, int max_iters) {
    SolverSettings st;
    st.tol = tol;
    st.max_iters = max_iters;
    return solve(p, st);
}

}  // namespace isac::conic
