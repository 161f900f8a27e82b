#include <doctest.h>

#include <cstring>
#include <sstream>

#include "isac/conic.hpp"
#include "oracles.hpp"

using namespace isac::conic;

namespace {

ConicProblem trace_lp(const Eigen::MatrixXd& C, double tau) {
    ConicProblem p;
    p.psd_dims = {static_cast<int>(C.rows())};
    p.resize_vectors();
    ConicProblem::add_sym_coeff(p.objective, 0, C);
    p.ineq_coeffs = Eigen::MatrixXd::Zero(1, p.num_vars());
    Eigen::VectorXd row = Eigen::VectorXd::Zero(p.num_vars());
    ConicProblem::add_sym_coeff(row, 0, Eigen::MatrixXd::Identity(C.rows(), C.cols()));
    p.ineq_coeffs.row(0) = row.transpose();
    p.ineq_rhs = Eigen::VectorXd::Constant(1, tau);
    return p;
}

}  // namespace

TEST_CASE("svec/smat round trip preserves trace inner products") {
    for (int n : {1, 2, 4, 8}) {
        const Eigen::MatrixXd A = oracles::random_symmetric(n);
        const Eigen::MatrixXd B = oracles::random_symmetric(n);
        CHECK(smat(svec(A), n).isApprox(A, 1e-14));
        CHECK(svec(A).dot(svec(B)) == doctest::Approx((A * B).trace()).epsilon(1e-12));
    }
}

TEST_CASE("embed_hermitian basic examples") {
    CHECK(embed_hermitian(Eigen::MatrixXcd::Identity(2, 2))
              .isApprox(Eigen::MatrixXd::Identity(4, 4), 1e-15));

    Eigen::MatrixXcd H(2, 2);
    H << 0.0, std::complex<double>(0, 1), std::complex<double>(0, -1), 0.0;
    const Eigen::MatrixXd X = embed_hermitian(H);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(X, Eigen::EigenvaluesOnly);
    Eigen::VectorXd expected(4);
    expected << -1, -1, 1, 1;
    CHECK(es.eigenvalues().isApprox(expected, 1e-12));

    // trace identity on random Hermitian pairs
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::MatrixXcd A = oracles::random_hermitian_psd(4);
        const Eigen::MatrixXcd B = oracles::random_hermitian(4);
        const double lhs = (embed_hermitian(A) * embed_hermitian(B)).trace();
        const double rhs = 2.0 * (A * B).trace().real();
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
        CHECK(extract_hermitian(embed_hermitian(B)).isApprox(B, 1e-13));
    }

    Eigen::MatrixXcd bad(2, 2);
    bad << 1.0, 2.0, 3.0, 1.0;
    CHECK_THROWS_AS(embed_hermitian(bad), std::invalid_argument);
}

TEST_CASE("diagonal trace LP has eigenvalue solution") {
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(2, 2);
    C(0, 0) = 1.0;
    C(1, 1) = 2.0;
    const auto sol = solve(trace_lp(C, 1.0), 1e-8, 100);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(2.0).epsilon(1e-7));
    const Eigen::MatrixXd X = sol.psd_block(trace_lp(C, 1.0), 0);
    CHECK(X(1, 1) == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(X(0, 0) == doctest::Approx(0.0).epsilon(1e-5));
}

TEST_CASE("norm-ball LP solves to minus the norm") {
    ConicProblem p;
    p.num_scalars = 2;
    p.resize_vectors();
    p.objective << -3.0, -4.0;  // maximize -c.x == minimize c.x
    SecondOrderCone cone;
    cone.t_coeffs = Eigen::VectorXd::Zero(2);
    cone.t_const = 1.0;
    cone.u_coeffs = Eigen::MatrixXd::Identity(2, 2);
    cone.u_const = Eigen::VectorXd::Zero(2);
    p.socs.push_back(cone);
    const auto sol = solve(p, 1e-8, 100);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(-sol.objective == doctest::Approx(-5.0).epsilon(1e-7));
    CHECK(sol.x(0) == doctest::Approx(-0.6).epsilon(1e-6));
    CHECK(sol.x(1) == doctest::Approx(-0.8).epsilon(1e-6));
}

TEST_CASE("random PSD trace LPs match the eigenvalue oracle") {
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::MatrixXd C = oracles::random_symmetric(4, 2.0);
        const double tau = oracles::uniform(0.5, 3.0);
        const auto p = trace_lp(C, tau);
        const auto sol = solve(p, 1e-8, 100);
        REQUIRE(sol.status == SolveStatus::Optimal);
        const double expected = oracles::trace_lp_optimum(C, tau);
        CHECK(sol.objective == doctest::Approx(expected).epsilon(1e-6));

        // returned block stays PSD within tolerance
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sol.psd_block(p, 0),
                                                          Eigen::EigenvaluesOnly);
        CHECK(es.eigenvalues().minCoeff() >=
              -1e-8 * (1.0 + sol.psd_block(p, 0).trace()));
    }
}

TEST_CASE("equality constraints with PSD block") {
    // maximize tr(C X) s.t. tr(X) = 1, X >= 0 (simplex over PSD)
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(3, 3);
    C(0, 0) = 1.0;
    C(1, 1) = 5.0;
    C(2, 2) = 3.0;
    ConicProblem p;
    p.psd_dims = {3};
    p.resize_vectors();
    ConicProblem::add_sym_coeff(p.objective, 0, C);
    p.eq_coeffs = Eigen::MatrixXd::Zero(1, p.num_vars());
    Eigen::VectorXd row = Eigen::VectorXd::Zero(p.num_vars());
    ConicProblem::add_sym_coeff(row, 0, Eigen::MatrixXd::Identity(3, 3));
    p.eq_coeffs.row(0) = row.transpose();
    p.eq_rhs = Eigen::VectorXd::Constant(1, 1.0);
    const auto sol = solve(p, 1e-8, 100);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(5.0).epsilon(1e-7));
}

TEST_CASE("mixed scalars, SOC, and inequality") {
    // maximize x + y s.t. ||(x, y)|| <= 1, x <= 0.3
    ConicProblem p;
    p.num_scalars = 2;
    p.resize_vectors();
    p.objective << 1.0, 1.0;
    SecondOrderCone cone;
    cone.t_coeffs = Eigen::VectorXd::Zero(2);
    cone.t_const = 1.0;
    cone.u_coeffs = Eigen::MatrixXd::Identity(2, 2);
    cone.u_const = Eigen::VectorXd::Zero(2);
    p.socs.push_back(cone);
    p.ineq_coeffs = Eigen::MatrixXd::Zero(1, 2);
    p.ineq_coeffs(0, 0) = 1.0;
    p.ineq_rhs = Eigen::VectorXd::Constant(1, 0.3);
    const auto sol = solve(p, 1e-8, 100);
    REQUIRE(sol.status == SolveStatus::Optimal);
    const double expected = 0.3 + std::sqrt(1.0 - 0.09);
    CHECK(sol.objective == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("infeasible linear system is reported, not thrown") {
    // x <= -1 and -x <= -1 cannot both hold.
    ConicProblem p;
    p.num_scalars = 1;
    p.resize_vectors();
    p.objective << 0.0;
    p.ineq_coeffs = Eigen::MatrixXd(2, 1);
    p.ineq_coeffs << 1.0, -1.0;
    p.ineq_rhs = Eigen::VectorXd(2);
    p.ineq_rhs << -1.0, -1.0;
    const auto sol = solve(p, 1e-8, 100);
    CHECK(sol.status == SolveStatus::Infeasible);
}

TEST_CASE("deterministic: identical problems give bitwise-identical iterates") {
    const Eigen::MatrixXd C = oracles::random_symmetric(4, 1.5);
    const auto p = trace_lp(C, 2.0);
    const auto a = solve(p, 1e-8, 100);
    const auto b = solve(p, 1e-8, 100);
    REQUIRE(a.status == SolveStatus::Optimal);
    CHECK(a.iterations == b.iterations);
    CHECK(std::memcmp(a.x.data(), b.x.data(), sizeof(double) * a.x.size()) == 0);
}

TEST_CASE("objective scaling leaves the argmax unchanged") {
    const Eigen::MatrixXd C = oracles::random_symmetric(3, 1.0);
    auto p = trace_lp(C, 1.0);
    const auto base = solve(p, 1e-8, 100);
    p.objective *= 7.5;
    const auto scaled = solve(p, 1e-8, 100);
    REQUIRE(base.status == SolveStatus::Optimal);
    REQUIRE(scaled.status == SolveStatus::Optimal);
    CHECK((base.x - scaled.x).norm() <= 10.0 * 1e-8 * (1.0 + base.x.norm()));
}

TEST_CASE("weak duality honored on returned optima") {
    for (int trial = 0; trial < 5; ++trial) {
        const Eigen::MatrixXd C = oracles::random_symmetric(4, 1.0);
        const auto p = trace_lp(C, 1.0);
        const auto sol = solve(p, 1e-8, 100);
        REQUIRE(sol.status == SolveStatus::Optimal);
        CHECK(sol.kkt.gap <= 1e-8 * (1.0 + std::abs(sol.objective)) + 1e-12);
        CHECK(sol.kkt.primal <= 1e-8);
        CHECK(sol.kkt.dual <= 1e-8);
    }
}

TEST_CASE("tolerance precondition is enforced") {
    const auto p = trace_lp(Eigen::MatrixXd::Identity(2, 2), 1.0);
    CHECK_THROWS_AS(solve(p, 1e-3, 10), std::invalid_argument);
    CHECK_THROWS_AS(solve(p, 1e-12, 10), std::invalid_argument);
}

TEST_CASE("debug dump emits all sections") {
    auto p = trace_lp(Eigen::MatrixXd::Identity(2, 2), 1.0);
    SecondOrderCone cone;
    cone.t_coeffs = Eigen::VectorXd::Zero(p.num_vars());
    cone.t_const = 1.0;
    cone.u_coeffs = Eigen::MatrixXd::Zero(1, p.num_vars());
    cone.u_const = Eigen::VectorXd::Zero(1);
    p.socs.push_back(cone);
    std::ostringstream os;
    dump(p, os);
    const std::string text = os.str();
    CHECK(text.find("psd_blocks") != std::string::npos);
    CHECK(text.find("inequalities") != std::string::npos);
    CHECK(text.find("second_order_cones") != std::string::npos);
    CHECK(text.find("end") != std::string::npos);
}
