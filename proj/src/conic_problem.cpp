#include "isac/conic.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace isac::conic {

namespace {
constexpr double kSqrt2 = 1.4142135623730951;
}

Eigen::VectorXd svec(const Eigen::MatrixXd& S) {
    const int n = static_cast<int>(S.rows());
    Eigen::VectorXd v(svec_dim(n));
    int idx = 0;
    for (int c = 0; c < n; ++c) {
        v(idx++) = S(c, c);
        for (int r = c + 1; r < n; ++r) {
            v(idx++) = kSqrt2 * 0.5 * (S(r, c) + S(c, r));
        }
    }
    return v;
}

Eigen::MatrixXd smat(const Eigen::VectorXd& v, int dim) {
    Eigen::MatrixXd S(dim, dim);
    int idx = 0;
    for (int c = 0; c < dim; ++c) {
        S(c, c) = v(idx++);
        for (int r = c + 1; r < dim; ++r) {
            const double x = v(idx++) / kSqrt2;
            S(r, c) = x;
            S(c, r) = x;
        }
    }
    return S;
}

Eigen::MatrixXd embed_hermitian(const Eigen::MatrixXcd& H) {
    const double herm_err = (H - H.adjoint()).norm();
    if (herm_err > 1e-9 * std::max(1.0, H.norm())) {
        throw std::invalid_argument("embed_hermitian: input is not Hermitian");
    }
    const int n = static_cast<int>(H.rows());
    Eigen::MatrixXd X(2 * n, 2 * n);
    X.topLeftCorner(n, n) = H.real();
    X.topRightCorner(n, n) = -H.imag();
    X.bottomLeftCorner(n, n) = H.imag();
    X.bottomRightCorner(n, n) = H.real();
    // Symmetrize away representation roundoff in Im H's diagonal.
    return 0.5 * (X + X.transpose());
}

Eigen::MatrixXcd extract_hermitian(const Eigen::MatrixXd& X) {
    const int n = static_cast<int>(X.rows()) / 2;
    const Eigen::MatrixXd re = 0.5 * (X.topLeftCorner(n, n) + X.bottomRightCorner(n, n));
    const Eigen::MatrixXd im = 0.5 * (X.bottomLeftCorner(n, n) - X.topRightCorner(n, n));
    Eigen::MatrixXcd H = re.cast<std::complex<double>>() +
                         std::complex<double>(0.0, 1.0) * im.cast<std::complex<double>>();
    return 0.5 * (H + H.adjoint());
}

int ConicProblem::num_vars() const {
    int n = num_scalars;
    for (int d : psd_dims) n += svec_dim(d);
    return n;
}

int ConicProblem::psd_offset(int block) const {
    int off = num_scalars;
    for (int j = 0; j < block; ++j) off += svec_dim(psd_dims[j]);
    return off;
}

void ConicProblem::resize_vectors() {
    const int n = num_vars();
    if (objective.size() != n) objective = Eigen::VectorXd::Zero(n);
    if (eq_coeffs.size() == 0) {
        eq_coeffs.resize(0, n);
        eq_rhs.resize(0);
    }
    if (ineq_coeffs.size() == 0) {
        ineq_coeffs.resize(0, n);
        ineq_rhs.resize(0);
    }
}

void ConicProblem::add_sym_coeff(Eigen::Ref<Eigen::VectorXd> row, int offset,
                                 const Eigen::MatrixXd& C) {
    const Eigen::VectorXd v = svec(C);
    row.segment(offset, v.size()) += v;
}

Eigen::MatrixXd ConicSolution::psd_block(const ConicProblem& p, int block) const {
    const int d = p.psd_dims[block];
    return smat(x.segment(p.psd_offset(block), svec_dim(d)), d);
}

void dump(const ConicProblem& p, std::ostream& os) {
    os.precision(17);
    os << "conic_problem\n";
    os << "scalars " << p.num_scalars << "\n";
    os << "psd_blocks " << p.psd_dims.size();
    for (int d : p.psd_dims) os << " " << d;
    os << "\n";
    os << "objective_maximize " << p.objective.size() << "\n";
    for (int i = 0; i < p.objective.size(); ++i) os << p.objective(i) << (i + 1 == p.objective.size() ? "\n" : " ");
    auto dump_rows = [&os](const char* name, const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
        os << name << " " << A.rows() << " " << A.cols() << "\n";
        for (int r = 0; r < A.rows(); ++r) {
            for (int c = 0; c < A.cols(); ++c) os << A(r, c) << " ";
            os << "| " << b(r) << "\n";
        }
    };
    dump_rows("equalities", p.eq_coeffs, p.eq_rhs);
    dump_rows("inequalities", p.ineq_coeffs, p.ineq_rhs);
    os << "second_order_cones " << p.socs.size() << "\n";
    for (const auto& c : p.socs) {
        os << "soc_dim " << c.u_const.size() + 1 << "\n";
        os << "t ";
        for (int i = 0; i < c.t_coeffs.size(); ++i) os << c.t_coeffs(i) << " ";
        os << "| " << c.t_const << "\n";
        for (int r = 0; r < c.u_coeffs.rows(); ++r) {
            os << "u ";
            for (int i = 0; i < c.u_coeffs.cols(); ++i) os << c.u_coeffs(r, i) << " ";
            os << "| " << c.u_const(r) << "\n";
        }
    }
    os << "end\n";
}

}  // namespace isac::conic
