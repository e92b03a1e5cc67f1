#include "tenevo/separable_field.hpp"

#include <algorithm>
#include <cstring>

#include "tenevo/errors.hpp"

namespace tenevo {

namespace {

void check_compatible(const SeparableField& a, const SeparableField& b) {
    if (a.dims() != b.dims()) {
        throw InvalidArgument("separable fields differ in dimension");
    }
    for (int i = 0; i < a.dims(); ++i) {
        if (a.factors[i].rows() != b.factors[i].rows()) {
            throw InvalidArgument("separable fields sampled on different rules");
        }
    }
}

} // namespace

double SeparableField::at(std::span<const int> q) const {
    if (q.size() != factors.size()) {
        throw InvalidArgument("SeparableField::at: index has wrong dimension");
    }
    double sum = 0.0;
    for (int s = 0; s < rank(); ++s) {
        double term = coeff[s];
        for (std::size_t i = 0; i < factors.size(); ++i) {
            term *= factors[i](q[i], s);
        }
        sum += term;
    }
    return sum;
}

SeparableField& SeparableField::operator+=(const SeparableField& other) {
    if (factors.empty()) {
        *this = other;
        return *this;
    }
    check_compatible(*this, other);
    const Eigen::Index r = rank();
    const Eigen::Index ro = other.rank();
    for (std::size_t i = 0; i < factors.size(); ++i) {
        Eigen::MatrixXd joined(factors[i].rows(), r + ro);
        joined << factors[i], other.factors[i];
        factors[i] = std::move(joined);
    }
    Eigen::VectorXd c(r + ro);
    c << coeff, other.coeff;
    coeff = std::move(c);
    return *this;
}

SeparableField& SeparableField::operator*=(double s) {
    coeff *= s;
    return *this;
}

SeparableField SeparableField::zero(const Rules& rules) {
    SeparableField f;
    for (const auto& r : rules) {
        f.factors.emplace_back(static_cast<Eigen::Index>(r.size()), 0);
    }
    f.coeff.resize(0);
    return f;
}

SeparableField SeparableField::product(std::vector<Eigen::VectorXd> vectors, double c) {
    SeparableField f;
    for (auto& v : vectors) {
        f.factors.emplace_back(std::move(v));
    }
    f.coeff = Eigen::VectorXd::Constant(1, c);
    return f;
}

SeparableField SeparableField::from_factors(const FactorTable& table, std::span<const int> orders) {
    if (orders.size() != static_cast<std::size_t>(table.dims())) {
        throw InvalidArgument("from_factors: one order per dimension required");
    }
    SeparableField f;
    for (int i = 0; i < table.dims(); ++i) {
        const int m = orders[static_cast<std::size_t>(i)];
        if (m < 0 || m > table.max_order) {
            throw InvalidArgument("from_factors: factor table lacks derivative order " + std::to_string(m));
        }
        f.factors.push_back(table.values[i][m]);
    }
    f.coeff = Eigen::VectorXd::Ones(table.rank());
    return f;
}

SeparableField SeparableField::from_factors(const FactorTable& table) {
    const std::vector<int> zeros(static_cast<std::size_t>(table.dims()), 0);
    return from_factors(table, zeros);
}

SeparableField SeparableField::merged() const {
    SeparableField out;
    out.factors.resize(factors.size());
    std::vector<int> keep;
    std::vector<double> c;
    const auto same = [&](int s, int t) {
        for (const auto& f : factors) {
            if (std::memcmp(f.col(s).data(), f.col(t).data(), sizeof(double) * f.rows()) != 0) return false;
        }
        return true;
    };
    for (int s = 0; s < rank(); ++s) {
        auto it = std::find_if(keep.begin(), keep.end(), [&](int t) { return same(s, t); });
        if (it == keep.end()) {
            keep.push_back(s);
            c.push_back(coeff[s]);
        } else {
            c[static_cast<std::size_t>(it - keep.begin())] += coeff[s];
        }
    }
    for (std::size_t i = 0; i < factors.size(); ++i) {
        out.factors[i].resize(factors[i].rows(), static_cast<Eigen::Index>(keep.size()));
        for (std::size_t k = 0; k < keep.size(); ++k) {
            out.factors[i].col(static_cast<Eigen::Index>(k)) = factors[i].col(keep[k]);
        }
    }
    out.coeff = Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
    return out;
}

SeparableField operator+(SeparableField a, const SeparableField& b) {
    a += b;
    return a;
}

SeparableField operator-(SeparableField a, const SeparableField& b) {
    SeparableField nb = b;
    nb.coeff = -nb.coeff;
    a += nb;
    return a;
}

SeparableField operator*(SeparableField a, double s) {
    a *= s;
    return a;
}

SeparableField operator*(const SeparableField& a, const SeparableField& b) {
    check_compatible(a, b);
    const int ra = a.rank();
    const int rb = b.rank();
    SeparableField out;
    out.factors.resize(a.factors.size());
    for (std::size_t i = 0; i < a.factors.size(); ++i) {
        out.factors[i].resize(a.factors[i].rows(), static_cast<Eigen::Index>(ra) * rb);
        for (int s = 0; s < ra; ++s) {
            for (int t = 0; t < rb; ++t) {
                out.factors[i].col(s * rb + t) = a.factors[i].col(s).cwiseProduct(b.factors[i].col(t));
            }
        }
    }
    out.coeff.resize(static_cast<Eigen::Index>(ra) * rb);
    for (int s = 0; s < ra; ++s) {
        for (int t = 0; t < rb; ++t) {
            out.coeff[s * rb + t] = a.coeff[s] * b.coeff[t];
        }
    }
    return out;
}

std::vector<Eigen::MatrixXd> overlaps(const SeparableField& a, const SeparableField& b, const Rules& rules) {
    check_compatible(a, b);
    if (rules.size() != a.factors.size()) {
        throw InvalidArgument("overlaps: one rule per dimension required");
    }
    std::vector<Eigen::MatrixXd> out(rules.size());
    for (std::size_t i = 0; i < rules.size(); ++i) {
        if (static_cast<std::size_t>(a.factors[i].rows()) != rules[i].size()) {
            throw InvalidArgument("overlaps: field not sampled on the given rule");
        }
        const Eigen::Map<const Eigen::VectorXd> w(rules[i].weights.data(),
                                                  static_cast<Eigen::Index>(rules[i].size()));
        out[i].noalias() = a.factors[i].transpose() * w.asDiagonal() * b.factors[i];
    }
    return out;
}

double inner(const SeparableField& a, const SeparableField& b, const Rules& rules) {
    const auto ov = overlaps(a, b, rules);
    Eigen::MatrixXd prod = a.coeff * b.coeff.transpose();
    for (const auto& o : ov) {
        prod.array() *= o.array();
    }
    return prod.sum();
}

} // namespace tenevo
