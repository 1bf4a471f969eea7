#include "allflow/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "allflow/error.hpp"

namespace allflow::poly {

namespace {

Complex ipow(Complex base, unsigned exp)
{
    Complex out(1.0);
    for (unsigned i = 0; i < exp; ++i) out *= base;
    return out;
}

void require_size(const Polynomial& a, const Polynomial& b)
{
    if (a.indeterminates() != b.indeterminates()) {
        throw Error(Module::steady_poly, "indeterminate-mismatch", "polynomials over different indeterminate sets");
    }
}

std::string format_number(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

Polynomial Polynomial::constant(std::size_t indeterminates, Complex value)
{
    Polynomial p(indeterminates);
    p.add_term(Exponents(indeterminates, 0), value);
    return p;
}

Polynomial Polynomial::indeterminate(std::size_t indeterminates, std::size_t index)
{
    Polynomial p(indeterminates);
    Exponents e(indeterminates, 0);
    e.at(index) = 1;
    p.add_term(e, 1.0);
    return p;
}

void Polynomial::add_term(const Exponents& exponents, Complex coefficient)
{
    if (exponents.size() != n_) {
        throw Error(Module::steady_poly, "indeterminate-mismatch", "exponent vector has the wrong length");
    }
    if (coefficient == Complex(0.0)) return;
    auto [it, inserted] = terms_.try_emplace(exponents, coefficient);
    if (!inserted) {
        it->second += coefficient;
        if (it->second == Complex(0.0)) terms_.erase(it);
    }
}

int Polynomial::degree_in(std::size_t first, std::size_t count) const
{
    int deg = 0;
    for (const auto& [e, c] : terms_) {
        int d = 0;
        for (std::size_t i = first; i < first + count && i < n_; ++i) d += e[i];
        deg = std::max(deg, d);
    }
    return deg;
}

Complex Polynomial::evaluate(std::span<const Complex> values) const
{
    if (values.size() != n_) {
        throw Error(Module::steady_poly, "dimension-mismatch", "evaluation point has the wrong length");
    }
    Complex sum(0.0);
    for (const auto& [e, c] : terms_) {
        Complex t = c;
        for (std::size_t i = 0; i < n_; ++i) {
            if (e[i]) t *= ipow(values[i], e[i]);
        }
        sum += t;
    }
    return sum;
}

Polynomial Polynomial::derivative(std::size_t index) const
{
    Polynomial d(n_);
    for (const auto& [e, c] : terms_) {
        if (e[index] == 0) continue;
        Exponents lowered = e;
        lowered[index] -= 1;
        d.add_term(lowered, c * static_cast<double>(e[index]));
    }
    return d;
}

Polynomial Polynomial::substitute(std::size_t first, std::span<const Complex> values) const
{
    Polynomial out(n_);
    for (const auto& [e, c] : terms_) {
        Exponents reduced = e;
        Complex coeff = c;
        for (std::size_t k = 0; k < values.size(); ++k) {
            coeff *= ipow(values[k], e[first + k]);
            reduced[first + k] = 0;
        }
        out.add_term(reduced, coeff);
    }
    return out;
}

Polynomial& Polynomial::operator+=(const Polynomial& rhs)
{
    require_size(*this, rhs);
    for (const auto& [e, c] : rhs.terms_) add_term(e, c);
    return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& rhs)
{
    require_size(*this, rhs);
    for (const auto& [e, c] : rhs.terms_) add_term(e, -c);
    return *this;
}

Polynomial operator*(const Polynomial& lhs, const Polynomial& rhs)
{
    require_size(lhs, rhs);
    Polynomial out(lhs.n_);
    Exponents e(lhs.n_);
    for (const auto& [ea, ca] : lhs.terms_) {
        for (const auto& [eb, cb] : rhs.terms_) {
            for (std::size_t i = 0; i < lhs.n_; ++i) e[i] = static_cast<std::uint16_t>(ea[i] + eb[i]);
            out.add_term(e, ca * cb);
        }
    }
    return out;
}

Polynomial& Polynomial::operator*=(const Polynomial& rhs)
{
    *this = *this * rhs;
    return *this;
}

Polynomial& Polynomial::operator*=(Complex scale)
{
    if (scale == Complex(0.0)) {
        terms_.clear();
        return *this;
    }
    for (auto& [e, c] : terms_) c *= scale;
    return *this;
}

PolynomialSystem::PolynomialSystem(std::vector<std::string> variables, std::vector<std::string> parameters,
                                   std::vector<Polynomial> equations)
    : variables_(std::move(variables)), parameters_(std::move(parameters)), equations_(std::move(equations))
{
    const std::size_t n = variables_.size() + parameters_.size();
    for (const auto& eq : equations_) {
        if (eq.indeterminates() != n) {
            throw Error(Module::steady_poly, "indeterminate-mismatch",
                        "equation support does not match the registered variables and parameters");
        }
        for (const auto& [e, c] : eq.terms()) {
            if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) {
                throw Error(Module::steady_poly, "non-finite-coefficient", "polynomial coefficient is not finite");
            }
        }
    }
}

PolynomialSystem PolynomialSystem::bind(std::vector<Complex> values) const
{
    if (values.size() != parameters_.size()) {
        throw Error(Module::steady_poly, "dimension-mismatch", "wrong number of parameter values");
    }
    PolynomialSystem out = *this;
    out.bound_ = std::move(values);
    return out;
}

int PolynomialSystem::degree(std::size_t i) const { return equations_.at(i).degree_in(0, variables_.size()); }

bool PolynomialSystem::has_real_coefficients() const
{
    for (const auto& eq : equations_) {
        for (const auto& [e, c] : eq.terms()) {
            if (c.imag() != 0.0) return false;
        }
    }
    if (bound_) {
        for (const auto& v : *bound_) {
            if (v.imag() != 0.0) return false;
        }
    }
    return true;
}

std::string PolynomialSystem::dump() const
{
    std::vector<std::string> names = variables_;
    names.insert(names.end(), parameters_.begin(), parameters_.end());
    std::ostringstream out;
    for (const auto& eq : equations_) {
        bool first_term = true;
        if (eq.is_zero()) out << "0";
        for (const auto& [e, c] : eq.terms()) {
            if (!first_term) out << " + ";
            first_term = false;
            out << "(" << format_number(c.real()) << "," << format_number(c.imag()) << ")";
            for (std::size_t i = 0; i < e.size(); ++i) {
                if (e[i] == 0) continue;
                out << " * " << names[i];
                if (e[i] > 1) out << "^" << e[i];
            }
        }
        out << "\n";
    }
    return out.str();
}

namespace {

std::vector<Complex> full_point(const PolynomialSystem& sys, const Eigen::VectorXcd& point)
{
    if (!sys.is_bound()) throw Error(Module::steady_poly, "unbound-parameter", "system parameters are not bound");
    if (static_cast<std::size_t>(point.size()) != sys.variable_count()) {
        throw Error(Module::steady_poly, "dimension-mismatch", "point length differs from the variable count");
    }
    std::vector<Complex> values(point.data(), point.data() + point.size());
    if (sys.parameter_count() > 0) {
        values.insert(values.end(), sys.bound_parameters()->begin(), sys.bound_parameters()->end());
    }
    return values;
}

}  // namespace

Eigen::VectorXcd residual(const PolynomialSystem& sys, const Eigen::VectorXcd& point)
{
    const auto values = full_point(sys, point);
    Eigen::VectorXcd out(sys.equation_count());
    for (std::size_t i = 0; i < sys.equation_count(); ++i) out[i] = sys.equations()[i].evaluate(values);
    return out;
}

Eigen::MatrixXcd system_jacobian(const PolynomialSystem& sys, const Eigen::VectorXcd& point)
{
    const auto values = full_point(sys, point);
    Eigen::MatrixXcd jac(sys.equation_count(), sys.variable_count());
    for (std::size_t i = 0; i < sys.equation_count(); ++i) {
        for (std::size_t j = 0; j < sys.variable_count(); ++j) {
            jac(i, j) = sys.equations()[i].derivative(j).evaluate(values);
        }
    }
    return jac;
}

std::uint64_t total_degree(const PolynomialSystem& sys)
{
    std::uint64_t product = 1;
    for (std::size_t i = 0; i < sys.equation_count(); ++i) {
        const auto d = static_cast<std::uint64_t>(sys.degree(i));
        if (d != 0 && product > std::numeric_limits<std::uint64_t>::max() / d) {
            return std::numeric_limits<std::uint64_t>::max();
        }
        product *= d;
    }
    return product;
}

CompiledSystem::CompiledSystem(const PolynomialSystem& bound) : n_vars_(bound.variable_count())
{
    if (!bound.is_bound()) throw Error(Module::steady_poly, "unbound-parameter", "system parameters are not bound");
    std::vector<Complex> params;
    if (bound.parameter_count() > 0) params = *bound.bound_parameters();

    for (const auto& eq : bound.equations()) {
        const Polynomial p = params.empty() ? eq : eq.substitute(n_vars_, params);
        Equation rec{static_cast<std::uint32_t>(terms_.size()), 0};
        for (const auto& [e, c] : p.terms()) {
            Term t{c, static_cast<std::uint32_t>(factors_.size()), 0};
            for (std::size_t v = 0; v < n_vars_; ++v) {
                if (e[v] == 0) continue;
                factors_.push_back({static_cast<std::uint32_t>(v), e[v]});
                ++t.factor_count;
            }
            if (c.imag() != 0.0) real_coefficients_ = false;
            terms_.push_back(t);
            ++rec.term_count;
        }
        equations_.push_back(rec);
        degrees_.push_back(p.degree_in(0, n_vars_));
    }
}

void CompiledSystem::evaluate(const Eigen::VectorXcd& x, Eigen::VectorXcd& f) const
{
    f.resize(static_cast<Eigen::Index>(equations_.size()));
    for (std::size_t i = 0; i < equations_.size(); ++i) {
        const auto& eq = equations_[i];
        Complex sum(0.0);
        for (std::uint32_t t = eq.first_term; t < eq.first_term + eq.term_count; ++t) {
            const auto& term = terms_[t];
            Complex value = term.coeff;
            for (std::uint32_t k = term.first_factor; k < term.first_factor + term.factor_count; ++k) {
                value *= ipow(x[factors_[k].var], factors_[k].exp);
            }
            sum += value;
        }
        f[static_cast<Eigen::Index>(i)] = sum;
    }
}

void CompiledSystem::evaluate(const Eigen::VectorXcd& x, Eigen::VectorXcd& f, Eigen::MatrixXcd& jac) const
{
    const auto rows = static_cast<Eigen::Index>(equations_.size());
    f.resize(rows);
    jac.setZero(rows, static_cast<Eigen::Index>(n_vars_));
    for (std::size_t i = 0; i < equations_.size(); ++i) {
        const auto& eq = equations_[i];
        const auto row = static_cast<Eigen::Index>(i);
        Complex sum(0.0);
        for (std::uint32_t t = eq.first_term; t < eq.first_term + eq.term_count; ++t) {
            const auto& term = terms_[t];
            const std::uint32_t begin = term.first_factor;
            const std::uint32_t end = begin + term.factor_count;
            Complex value = term.coeff;
            for (std::uint32_t k = begin; k < end; ++k) value *= ipow(x[factors_[k].var], factors_[k].exp);
            sum += value;
            for (std::uint32_t k = begin; k < end; ++k) {
                const auto& fk = factors_[k];
                Complex d = term.coeff * static_cast<double>(fk.exp) * ipow(x[fk.var], fk.exp - 1);
                for (std::uint32_t m = begin; m < end; ++m) {
                    if (m != k) d *= ipow(x[factors_[m].var], factors_[m].exp);
                }
                jac(row, fk.var) += d;
            }
        }
        f[row] = sum;
    }
}

}  // namespace allflow::poly
