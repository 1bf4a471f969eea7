#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace allflow::poly {

using Complex = std::complex<double>;
using Exponents = std::vector<std::uint16_t>;

/// Sparse multivariate polynomial with complex coefficients over a fixed
/// number of indeterminates. Terms with an exactly zero coefficient are
/// never stored.
class Polynomial {
public:
    explicit Polynomial(std::size_t indeterminates = 0) : n_(indeterminates) {}

    static Polynomial constant(std::size_t indeterminates, Complex value);
    static Polynomial indeterminate(std::size_t indeterminates, std::size_t index);

    std::size_t indeterminates() const { return n_; }
    const std::map<Exponents, Complex>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    void add_term(const Exponents& exponents, Complex coefficient);

    /// Total degree counting only indeterminates in [first, first + count).
    int degree_in(std::size_t first, std::size_t count) const;
    int total_degree() const { return degree_in(0, n_); }

    Complex evaluate(std::span<const Complex> values) const;
    Polynomial derivative(std::size_t index) const;

    /// Substitute values for indeterminates [first, first + values.size()),
    /// keeping them as (now constant) slots so the indeterminate count is unchanged.
    Polynomial substitute(std::size_t first, std::span<const Complex> values) const;

    Polynomial& operator+=(const Polynomial& rhs);
    Polynomial& operator-=(const Polynomial& rhs);
    Polynomial& operator*=(const Polynomial& rhs);
    Polynomial& operator*=(Complex scale);

    friend Polynomial operator+(Polynomial lhs, const Polynomial& rhs) { return lhs += rhs; }
    friend Polynomial operator-(Polynomial lhs, const Polynomial& rhs) { return lhs -= rhs; }
    friend Polynomial operator*(const Polynomial& lhs, const Polynomial& rhs);
    friend Polynomial operator*(Polynomial lhs, Complex rhs) { return lhs *= rhs; }
    friend Polynomial operator*(Complex lhs, Polynomial rhs) { return rhs *= lhs; }
    friend Polynomial operator-(Polynomial p) { return p *= Complex(-1.0); }

    friend bool operator==(const Polynomial&, const Polynomial&) = default;

private:
    std::size_t n_;
    std::map<Exponents, Complex> terms_;
};

/// Square (or not yet square) system of polynomials over an ordered variable
/// registry plus named parameter slots. Each equation is a Polynomial over
/// variables followed by parameters; parameters must be bound before the
/// system can be evaluated.
class PolynomialSystem {
public:
    PolynomialSystem() = default;
    PolynomialSystem(std::vector<std::string> variables, std::vector<std::string> parameters,
                     std::vector<Polynomial> equations);

    std::size_t variable_count() const { return variables_.size(); }
    std::size_t parameter_count() const { return parameters_.size(); }
    std::size_t equation_count() const { return equations_.size(); }
    bool is_square() const { return variables_.size() == equations_.size(); }

    const std::vector<std::string>& variable_names() const { return variables_; }
    const std::vector<std::string>& parameter_names() const { return parameters_; }
    const std::vector<Polynomial>& equations() const { return equations_; }

    const std::optional<std::vector<Complex>>& bound_parameters() const { return bound_; }
    bool is_bound() const { return parameters_.empty() || bound_.has_value(); }
    PolynomialSystem bind(std::vector<Complex> values) const;

    /// Total degree of equation `i` in the variables (parameters excluded).
    int degree(std::size_t i) const;
    bool has_real_coefficients() const;

    /// One equation per line, monomials written `coeff * x1^a1 ... xn^an`.
    std::string dump() const;

private:
    std::vector<std::string> variables_;
    std::vector<std::string> parameters_;
    std::vector<Polynomial> equations_;
    std::optional<std::vector<Complex>> bound_;
};

/// Exact evaluation of every equation at `point` (bound systems only).
Eigen::VectorXcd residual(const PolynomialSystem& sys, const Eigen::VectorXcd& point);
/// Symbolic partial derivatives evaluated at `point`, rows = equations.
Eigen::MatrixXcd system_jacobian(const PolynomialSystem& sys, const Eigen::VectorXcd& point);
/// Product of the equations' total degrees (the Bezout bound); saturates at UINT64_MAX.
std::uint64_t total_degree(const PolynomialSystem& sys);

/// Flattened evaluator for a bound system. Immutable and reentrant, this is
/// what path trackers evaluate in their inner loop.
class CompiledSystem {
public:
    CompiledSystem() = default;
    explicit CompiledSystem(const PolynomialSystem& bound);

    std::size_t equation_count() const { return equations_.size(); }
    std::size_t variable_count() const { return n_vars_; }
    const std::vector<int>& degrees() const { return degrees_; }
    bool has_real_coefficients() const { return real_coefficients_; }

    void evaluate(const Eigen::VectorXcd& x, Eigen::VectorXcd& f) const;
    void evaluate(const Eigen::VectorXcd& x, Eigen::VectorXcd& f, Eigen::MatrixXcd& jac) const;

private:
    struct Factor {
        std::uint32_t var;
        std::uint32_t exp;
    };
    struct Term {
        Complex coeff;
        std::uint32_t first_factor;
        std::uint32_t factor_count;
    };
    struct Equation {
        std::uint32_t first_term;
        std::uint32_t term_count;
    };

    std::size_t n_vars_ = 0;
    std::vector<Factor> factors_;
    std::vector<Term> terms_;
    std::vector<Equation> equations_;
    std::vector<int> degrees_;
    bool real_coefficients_ = true;
};

}  // namespace allflow::poly
