#pragma once

// Small end-to-end drivers used by several tests. Unlike oracles.hpp these
// call into the library.

#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "allflow/dynamics.hpp"
#include "allflow/homotopy.hpp"
#include "allflow/steady_poly.hpp"
#include "oracles.hpp"

namespace harness {

using Complex = std::complex<double>;
using namespace allflow;

/// Real Newton on a bound equilibrium system from a flat start. Lands on the
/// nominal operating point for the shipped cases.
inline Eigen::VectorXd newton_from_flat(const steady::EquilibriumProblem& p)
{
    Eigen::VectorXd x(p.variables.size());
    for (std::size_t i = 0; i < p.variables.size(); ++i) {
        switch (p.variables[i].quantity) {
            case steady::Quantity::v_re: x(i) = 1.0; break;
            case steady::Quantity::i_qs: x(i) = 0.7; break;
            case steady::Quantity::i_ds: x(i) = 0.3; break;
            default: x(i) = 0.0;
        }
    }
    const poly::CompiledSystem sys(p.system);
    Eigen::VectorXcd f;
    Eigen::MatrixXcd jac;
    for (int k = 0; k < 50; ++k) {
        sys.evaluate(x.cast<Complex>(), f, jac);
        if (f.cwiseAbs().maxCoeff() < 1e-13) break;
        x -= jac.real().partialPivLu().solve(f.real());
    }
    return x;
}

struct SmibRun {
    steady::SteadyState state;
    std::vector<Complex> eigenvalues;
    double derivative_residual = 0.0;
};

/// Solve the SMIB equilibrium with solve_all, keep the root nearest the
/// oracle terminal voltage, then linearize.
inline SmibRun smib_run(const oracle::Smib& s)
{
    const auto net = oracle::smib_network(s);
    const auto problem = steady::build_equilibrium_system(net, 1.0, 1.0, steady::Formulation::eliminated);
    const auto set = homotopy::solve_all(problem.system, {});
    const Complex vt = oracle::smib_equilibrium(s).terminal;
    const auto& vars = problem.variables;
    const std::size_t re = *vars.find(steady::Quantity::v_re, 1), im = *vars.find(steady::Quantity::v_im, 1);
    const homotopy::Solution* best = nullptr;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& sol : set.solutions) {
        const double d = std::abs(Complex(sol.x(re).real(), sol.x(im).real()) - vt);
        if (sol.is_real && d < best_d) {
            best_d = d;
            best = &sol;
        }
    }
    SmibRun out;
    if (!best) return out;
    const auto params = steady::parameter_values(1.0, 1.0);
    out.state = steady::interpret(net, problem, best->x.real().cast<Complex>(), params);
    const auto op = dyn::initialize(net, out.state, 1.0);
    out.derivative_residual = op.model.state_derivative(op.x, op.y).cwiseAbs().maxCoeff();
    out.eigenvalues = dyn::eigenvalues(dyn::linearize(op).reduced);
    return out;
}

}  // namespace harness
