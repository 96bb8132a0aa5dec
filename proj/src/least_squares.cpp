#include "spinhole/least_squares.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "spinhole/error.hpp"

namespace spinhole {

const char* termination_name(Termination t) {
    switch (t) {
        case Termination::gradient: return "gradient";
        case Termination::step: return "step";
        case Termination::zero_residual: return "zero-residual";
        case Termination::iteration_cap: return "iteration-cap";
    }
    return "?";
}

namespace {

std::size_t index_of(const std::vector<Parameter>& params, std::string_view name) {
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].name == name) return i;
    }
    fail(ErrorCategory::fit, fmt::format("no fit parameter named '{}'", name));
}

double sum_of_squares(const std::vector<double>& r) {
    double s = 0.0;
    for (double x : r) s += x * x;
    return s;
}

bool all_finite(const std::vector<double>& r) {
    return std::all_of(r.begin(), r.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

double FitResult::value(std::string_view name) const { return params[index_of(params, name)].value; }

const Interval& FitResult::interval(std::string_view name) const {
    const std::size_t i = index_of(params, name);
    if (i >= intervals.size()) fail(ErrorCategory::fit, "intervals were not computed for this fit");
    return intervals[i];
}

std::vector<double> FitResult::values() const {
    std::vector<double> v;
    for (const auto& p : params) v.push_back(p.value);
    return v;
}

double rmsd(std::span<const double> residuals) {
    if (residuals.empty()) return 0.0;
    double s = 0.0;
    for (double x : residuals) s += x * x;
    return std::sqrt(s / residuals.size());
}

namespace {

FitResult minimize(const ResidualFunction& residual, std::vector<Parameter> initial,
                   const LeastSquaresOptions& options) {
    for (const auto& p : initial) {
        if (!(p.lower <= p.upper)) fail(ErrorCategory::invalid_config, fmt::format("bounds of '{}' are inverted", p.name));
        if (!(p.value >= p.lower && p.value <= p.upper) || !std::isfinite(p.value)) {
            fail(ErrorCategory::invalid_config,
                 fmt::format("initial value {} of '{}' is outside [{}, {}]", p.value, p.name, p.lower, p.upper));
        }
    }
    std::vector<double> x;
    std::vector<int> free;
    std::vector<double> scale;
    for (std::size_t i = 0; i < initial.size(); ++i) {
        x.push_back(initial[i].value);
        if (initial[i].fixed) continue;
        free.push_back(static_cast<int>(i));
        const double s = initial[i].scale > 0.0 ? initial[i].scale
                         : initial[i].value != 0.0 ? std::abs(initial[i].value)
                                                   : 1.0;
        scale.push_back(s);
    }
    const int n = static_cast<int>(free.size());

    FitResult result;
    result.params = initial;
    std::vector<double> r = residual(x);
    if (!all_finite(r) || r.empty()) {
        fail(ErrorCategory::fit, "residual is empty or not finite at the initial point");
    }
    const int m = static_cast<int>(r.size());
    result.residual_count = m;
    double cost = sum_of_squares(r);

    auto finish = [&](Termination why, bool converged) {
        for (std::size_t i = 0; i < x.size(); ++i) result.params[i].value = x[i];
        result.rmsd = std::sqrt(cost / m);
        result.termination = why;
        result.converged = converged;
        return result;
    };

    if (n == 0) {
        result.converged = true;
        return finish(Termination::zero_residual, true);
    }

    auto lower = [&](int j) { return initial[free[j]].lower; };
    auto upper = [&](int j) { return initial[free[j]].upper; };

    Eigen::MatrixXd jac(m, n);
    Eigen::VectorXd grad(n);
    const double eps = std::sqrt(std::numeric_limits<double>::epsilon());

    auto jacobian = [&]() {
        for (int j = 0; j < n; ++j) {
            const int k = free[j];
            const double h = eps * std::max(std::abs(x[k]), scale[j]);
            std::vector<double> xt = x;
            double step = h;
            if (xt[k] + h > upper(j)) step = -h;
            xt[k] += step;
            std::vector<double> rt = residual(xt);
            if (static_cast<int>(rt.size()) != m || !all_finite(rt)) {
                fail(ErrorCategory::fit, fmt::format("residual is not finite near '{}' = {}", initial[k].name, x[k]));
            }
            const double du = (xt[k] - x[k]) / scale[j];
            for (int i = 0; i < m; ++i) jac(i, j) = (rt[i] - r[i]) / du;
        }
        Eigen::Map<const Eigen::VectorXd> rv(r.data(), m);
        grad = jac.transpose() * rv;
    };
    auto projected_gradient_norm = [&]() {
        double s = 0.0;
        for (int j = 0; j < n; ++j) {
            const double g = grad(j);
            const double xv = x[free[j]];
            if ((xv <= lower(j) && g > 0.0) || (xv >= upper(j) && g < 0.0)) continue;
            s += g * g;
        }
        return std::sqrt(s);
    };

    jacobian();
    const double gradient0 = projected_gradient_norm();
    double lambda = 0.0;
    bool warned_rank = false;

    for (int iter = 0; iter < options.max_iterations; ++iter) {
        if (cost == 0.0) return finish(Termination::zero_residual, true);
        const double gnorm = projected_gradient_norm();
        if (gnorm == 0.0 || gnorm <= options.gradient_tolerance * gradient0) {
            return finish(Termination::gradient, true);
        }
        const Eigen::MatrixXd normal = jac.transpose() * jac;
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(jac);
        const bool deficient = qr.rank() < n;
        Eigen::VectorXd damping(n);
        const double dmax = normal.diagonal().maxCoeff();
        if (deficient) {
            if (!warned_rank) {
                result.warnings.push_back(
                    fmt::format("Jacobian is rank deficient (rank {} of {}); using gradient steps", qr.rank(), n));
                warned_rank = true;
            }
            damping.setConstant(dmax > 0.0 ? dmax : 1.0);
            lambda = std::max(lambda, 1e-3);
        } else {
            for (int j = 0; j < n; ++j) damping(j) = std::max(normal(j, j), 1e-12 * dmax);
        }

        bool accepted = false;
        while (true) {
            Eigen::MatrixXd a = normal;
            a.diagonal() += lambda * damping;
            const Eigen::VectorXd delta = a.ldlt().solve(-grad);
            std::vector<double> xt = x;
            double step_norm = 0.0, u_norm = 0.0;
            for (int j = 0; j < n; ++j) {
                const int k = free[j];
                double v = x[k] + (std::isfinite(delta(j)) ? delta(j) : 0.0) * scale[j];
                v = std::clamp(v, lower(j), upper(j));
                xt[k] = v;
                const double du = (v - x[k]) / scale[j];
                step_norm += du * du;
                u_norm += (x[k] / scale[j]) * (x[k] / scale[j]);
            }
            step_norm = std::sqrt(step_norm);
            if (step_norm <= options.step_tolerance * (std::sqrt(u_norm) + options.step_tolerance)) {
                result.iterations = iter;
                return finish(Termination::step, true);
            }
            std::vector<double> rt = residual(xt);
            const double trial = all_finite(rt) ? sum_of_squares(rt) : kUnbounded;
            if (trial < cost) {
                x = std::move(xt);
                r = std::move(rt);
                cost = trial;
                result.cost_history.push_back(cost);
                lambda = lambda < 1e-12 ? 0.0 : lambda / 10.0;
                accepted = true;
                break;
            }
            lambda = lambda == 0.0 ? 1e-3 : lambda * 10.0;
            if (lambda > 1e16) break;
        }
        result.iterations = iter + 1;
        if (!accepted) return finish(Termination::step, true);
        jacobian();
    }
    result.warnings.push_back(fmt::format("iteration cap {} reached", options.max_iterations));
    return finish(Termination::iteration_cap, false);
}

}  // namespace

FitResult least_squares(const ResidualFunction& residual, std::vector<Parameter> initial,
                        const LeastSquaresOptions& options) {
    FitResult result = minimize(residual, std::move(initial), options);
    if (options.compute_intervals && result.converged) {
        result.intervals = rmsd_doubling_intervals(result, residual, options);
    }
    return result;
}

std::vector<Interval> rmsd_doubling_intervals(const FitResult& result, const ResidualFunction& residual,
                                              const LeastSquaresOptions& options) {
    if (!result.converged) fail(ErrorCategory::fit, "intervals need a converged fit");
    const LeastSquaresOptions& inner = options;
    const double target = 2.0 * result.rmsd;

    std::vector<Interval> out;
    for (std::size_t k = 0; k < result.params.size(); ++k) {
        const Parameter& best = result.params[k];
        if (best.fixed || result.rmsd == 0.0) {
            out.push_back({best.value, best.value});
            continue;
        }
        const double scale = best.scale > 0.0 ? best.scale : best.value != 0.0 ? std::abs(best.value) : 1.0;
        std::vector<Parameter> start = result.params;
        auto profile = [&](double v) {
            std::vector<Parameter> p = start;
            p[k].value = v;
            p[k].fixed = true;
            FitResult fit = minimize(residual, p, inner);
            return std::pair{fit.rmsd, fit.params};
        };

        Interval interval{best.value, best.value};
        for (int dir : {-1, +1}) {
            const double bound = dir < 0 ? best.lower : best.upper;
            double inside = best.value;
            double d = 1e-3 * scale;
            double outside = inside;
            bool open = true;
            start = result.params;
            for (int expand = 0; expand < 80; ++expand) {
                double v = best.value + dir * d;
                bool at_bound = false;
                if ((dir < 0 && v <= bound) || (dir > 0 && v >= bound)) {
                    v = bound;
                    at_bound = true;
                }
                auto [value, params] = profile(v);
                if (value >= target) {
                    outside = v;
                    open = false;
                    break;
                }
                inside = v;
                start = params;
                if (at_bound) break;
                d *= 2.0;
            }
            if (!open) {
                for (int it = 0; it < 200; ++it) {
                    const double width = std::abs(outside - inside);
                    const double ref = std::max({std::abs(inside), std::abs(outside), 1e-300});
                    if (width <= options.interval_tolerance * ref) break;
                    const double mid = 0.5 * (inside + outside);
                    auto [value, params] = profile(mid);
                    if (value >= target) {
                        outside = mid;
                    } else {
                        inside = mid;
                        start = params;
                    }
                }
            }
            if (dir < 0) {
                interval.low = inside;
                interval.low_open = open;
            } else {
                interval.high = inside;
                interval.high_open = open;
            }
        }
        out.push_back(interval);
    }
    return out;
}

std::string format_report(const FitResult& result) {
    std::string out = fmt::format("{:<14} {:>16} {:>16} {:>16}\n", "parameter", "value", "low", "high");
    for (std::size_t i = 0; i < result.params.size(); ++i) {
        const auto& p = result.params[i];
        std::string low = "-", high = "-";
        if (i < result.intervals.size()) {
            const auto& iv = result.intervals[i];
            low = fmt::format("{:.8g}{}", iv.low, iv.low_open ? " (open)" : "");
            high = fmt::format("{:.8g}{}", iv.high, iv.high_open ? " (open)" : "");
        }
        out += fmt::format("{:<14} {:>16.10g} {:>16} {:>16}{}\n", p.name, p.value, low, high,
                           p.fixed ? "  fixed" : "");
    }
    out += fmt::format("rmsd {:.6g} over {} residuals\n", result.rmsd, result.residual_count);
    out += fmt::format("iterations {}, converged {}, termination {}\n", result.iterations,
                       result.converged ? "yes" : "no", termination_name(result.termination));
    for (const auto& w : result.warnings) out += fmt::format("warning: {}\n", w);
    return out;
}

}  // namespace spinhole
