#pragma once

#include <cctype>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "mixpot/grid.hpp"

namespace mixpot {

/// Closed whitelist of exterior-data terms, summed:
///   const(c)
///   affine(c, a1[, a2])              c + a.x
///   bump(amp, c1[, c2], radius)      amp * exp(1 - 1/(1 - |x-c|^2/radius^2)) inside the ball
///   sinusoid(amp, k1[, k2], phase)   amp * sin(k.x + phase)
/// Terms are joined with '+', e.g. "affine(0,1,0.5)+sinusoid(0.1,3,2,0)".
class Expression {
public:
    struct Term {
        std::string kind;
        std::vector<double> args;
    };

    Expression() = default;

    static Expression parse(const std::string& text, int dim) {
        if (dim != 1 && dim != 2) throw DomainError("expression dimension must be 1 or 2");
        Expression e;
        e.dim_ = dim;
        std::size_t pos = 0;
        auto skip = [&] {
            while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
        };
        skip();
        if (pos == text.size()) throw DomainError("empty expression");
        while (true) {
            skip();
            std::size_t start = pos;
            while (pos < text.size() && std::isalpha(static_cast<unsigned char>(text[pos]))) ++pos;
            Term t;
            t.kind = text.substr(start, pos - start);
            skip();
            if (pos >= text.size() || text[pos] != '(') throw DomainError("expected '(' after '" + t.kind + "'");
            const std::size_t close = text.find(')', pos);
            if (close == std::string::npos) throw DomainError("missing ')' in expression");
            std::string inner = text.substr(pos + 1, close - pos - 1);
            pos = close + 1;
            std::stringstream ss(inner);
            std::string item;
            while (std::getline(ss, item, ',')) {
                std::size_t used = 0;
                double v;
                try {
                    v = std::stod(item, &used);
                } catch (const std::exception&) {
                    throw DomainError("bad number '" + item + "' in expression");
                }
                for (std::size_t k = used; k < item.size(); ++k)
                    if (!std::isspace(static_cast<unsigned char>(item[k]))) throw DomainError("bad number '" + item + "' in expression");
                t.args.push_back(v);
            }
            e.check(t);
            e.terms_.push_back(std::move(t));
            skip();
            if (pos == text.size()) break;
            if (text[pos] != '+') throw DomainError("expected '+' between expression terms");
            ++pos;
        }
        return e;
    }

    int dim() const { return dim_; }
    const std::vector<Term>& terms() const { return terms_; }

    double operator()(const Point& x) const {
        double v = 0.0;
        for (const auto& t : terms_) v += eval(t, x);
        return v;
    }

    /// True when every term is const or affine.
    bool is_affine() const {
        for (const auto& t : terms_)
            if (t.kind != "const" && t.kind != "affine") return false;
        return !terms_.empty();
    }

    std::string to_string() const {
        std::ostringstream os;
        os.precision(17);
        for (std::size_t i = 0; i < terms_.size(); ++i) {
            if (i) os << '+';
            os << terms_[i].kind << '(';
            for (std::size_t k = 0; k < terms_[i].args.size(); ++k) os << (k ? "," : "") << terms_[i].args[k];
            os << ')';
        }
        return os.str();
    }

    /// Sample on every node. The far field defaults to the mean of the
    /// expression over the box-edge nodes.
    GridFunction sample(const GridPtr& g, std::optional<double> far = std::nullopt) const {
        GridFunction f = GridFunction::sample(g, [&](const Point& x) { return (*this)(x); }, 0.0);
        if (far) {
            f.far_field = *far;
        } else {
            std::vector<double> edge;
            for (std::size_t i = 0; i < g->size(); ++i)
                if (g->on_box_edge(i)) edge.push_back(f.values[i]);
            f.far_field = edge.empty() ? 0.0 : pairwise_sum(edge.begin(), edge.end()) / static_cast<double>(edge.size());
        }
        return f;
    }

private:
    void check(const Term& t) const {
        const std::size_t d = static_cast<std::size_t>(dim_);
        std::size_t want;
        if (t.kind == "const") want = 1;
        else if (t.kind == "affine") want = 1 + d;
        else if (t.kind == "bump") want = 2 + d;
        else if (t.kind == "sinusoid") want = 2 + d;
        else throw DomainError("unknown expression term '" + t.kind + "' (allowed: const, affine, bump, sinusoid)");
        if (t.args.size() != want)
            throw DomainError("term '" + t.kind + "' takes " + std::to_string(want) + " arguments in " +
                              std::to_string(dim_) + "D");
        if (t.kind == "bump" && !(t.args.back() > 0.0)) throw DomainError("bump radius must be positive");
    }

    double eval(const Term& t, const Point& x) const {
        const auto& a = t.args;
        if (t.kind == "const") return a[0];
        if (t.kind == "affine") return a[0] + a[1] * x[0] + (dim_ == 2 ? a[2] * x[1] : 0.0);
        if (t.kind == "bump") {
            const Point c{a[1], dim_ == 2 ? a[2] : 0.0};
            const double r = a.back();
            const double t2 = dist2(x, c, dim_) / (r * r);
            return t2 < 1.0 ? a[0] * std::exp(1.0 - 1.0 / (1.0 - t2)) : 0.0;
        }
        const double phase = a.back();
        return a[0] * std::sin(a[1] * x[0] + (dim_ == 2 ? a[2] * x[1] : 0.0) + phase);
    }

    int dim_ = 2;
    std::vector<Term> terms_;
};

}  // namespace mixpot
