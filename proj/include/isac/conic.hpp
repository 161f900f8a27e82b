#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

namespace isac::conic {

/// Packed symmetric vectorization: lower triangle, column major, off-diagonal
/// entries scaled by sqrt(2) so that svec(A).dot(svec(B)) == tr(A B).
Eigen::VectorXd svec(const Eigen::MatrixXd& S);
Eigen::MatrixXd smat(const Eigen::VectorXd& v, int dim);
inline int svec_dim(int n) { return n * (n + 1) / 2; }

/// Real embedding [[Re H, -Im H], [Im H, Re H]] of a Hermitian matrix.
/// PSD iff H is PSD; tr(embed(H) embed(W)) = 2 Re tr(H W).
Eigen::MatrixXd embed_hermitian(const Eigen::MatrixXcd& H);

/// Recovers a Hermitian matrix from a 2N x 2N real symmetric block by
/// averaging the two embedded copies. Exact inverse on embedded inputs and a
/// feasibility-preserving projection otherwise.
Eigen::MatrixXcd extract_hermitian(const Eigen::MatrixXd& X);

/// ||u_coeffs x + u_const|| <= t_coeffs . x + t_const
struct SecondOrderCone {
    Eigen::VectorXd t_coeffs;
    double t_const = 0.0;
    Eigen::MatrixXd u_coeffs;
    Eigen::VectorXd u_const;
};

/// Standard-form convex program over free scalars and real symmetric PSD
/// blocks, with a linear objective (maximize), linear equalities and
/// inequalities, and second-order-cone constraints. Variables are packed as
/// [scalars..., svec(block 0), svec(block 1), ...].
struct ConicProblem {
    int num_scalars = 0;
    std::vector<int> psd_dims;

    Eigen::VectorXd objective;  // maximize objective . x

    Eigen::MatrixXd eq_coeffs;   // eq_coeffs x = eq_rhs
    Eigen::VectorXd eq_rhs;
    Eigen::MatrixXd ineq_coeffs;  // ineq_coeffs x <= ineq_rhs
    Eigen::VectorXd ineq_rhs;
    std::vector<SecondOrderCone> socs;

    int num_vars() const;
    int psd_offset(int block) const;  // packed offset of svec(block)

    void resize_vectors();  // allocates objective/rhs to consistent shapes

    /// Adds tr(C X_block) to a packed coefficient row (or the objective).
    static void add_sym_coeff(Eigen::Ref<Eigen::VectorXd> row, int offset,
                              const Eigen::MatrixXd& C);
};

enum class SolveStatus { Optimal, Infeasible, MaxIters };

struct KktResiduals {
    double primal = 0.0;
    double dual = 0.0;
    double gap = 0.0;
};

struct ConicSolution {
    SolveStatus status = SolveStatus::MaxIters;
    Eigen::VectorXd x;
    double objective = 0.0;
    KktResiduals kkt;
    int iterations = 0;

    Eigen::MatrixXd psd_block(const ConicProblem& p, int block) const;
};

struct SolverSettings {
    double tol = 1e-8;
    int max_iters = 200;
    const Eigen::VectorXd* x0 = nullptr;  // optional initial primal guess
};

ConicSolution solve(const ConicProblem& p, const SolverSettings& settings);
ConicSolution solve(const ConicProblem& p, double tol, int max_iters);

/// Self-describing text dump (one section per cone family, dense row-major
/// coefficients) for offline cross-checking against an external solver.
void dump(const ConicProblem& p, std::ostream& os);

}  // namespace isac::conic
