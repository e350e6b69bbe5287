#include "gscope/qml.hpp"

#include "gscope/detail/filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>

namespace gscope::qml {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sup_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

/// Maps unconstrained u onto the feasible set: omega = exp(u_0) and the p + q
/// coefficients c_k = s exp(u_k) / (1 + sum_l exp(u_l)) with s = 1 - margin.
class Reparam {
public:
    Reparam(ModelOrders orders, double margin) : orders_(orders), scale_(1.0 - margin) {}

    [[nodiscard]] std::size_t dim() const { return orders_.dim(); }

    [[nodiscard]] std::optional<ParamVector> to_theta(const Eigen::VectorXd& u) const {
        if (!u.allFinite() || u.maxCoeff() > 700.0) return std::nullopt;
        const std::size_t d = dim();
        std::vector<double> flat(d);
        flat[0] = std::exp(u[0]);
        double denom = 1.0;
        for (std::size_t k = 1; k < d; ++k) denom += std::exp(u[static_cast<Eigen::Index>(k)]);
        for (std::size_t k = 1; k < d; ++k)
            flat[k] = scale_ * std::exp(u[static_cast<Eigen::Index>(k)]) / denom;
        if (!(flat[0] > 0.0) || !std::isfinite(flat[0])) return std::nullopt;
        return ParamVector::from_flat(flat, orders_);
    }

    [[nodiscard]] Eigen::VectorXd to_u(const ParamVector& theta) const {
        const std::size_t d = dim();
        auto flat = theta.flat();
        constexpr double floor = 1e-8;
        double total = 0.0;
        for (std::size_t k = 1; k < d; ++k) {
            flat[k] = std::max(flat[k], floor);
            total += flat[k];
        }
        const double cap = scale_ - floor;
        if (total > cap) {
            for (std::size_t k = 1; k < d; ++k) flat[k] *= cap / total;
            total = cap;
        }
        Eigen::VectorXd u(static_cast<Eigen::Index>(d));
        u[0] = std::log(flat[0]);
        for (std::size_t k = 1; k < d; ++k)
            u[static_cast<Eigen::Index>(k)] = std::log(flat[k] / (scale_ - total));
        return u;
    }

    /// Chain rule: gradient in u from the gradient in theta.
    [[nodiscard]] Eigen::VectorXd pull_back(const ParamVector& theta,
                                            const std::vector<double>& g) const {
        const std::size_t d = dim();
        const auto c = theta.flat();
        double weighted = 0.0;
        for (std::size_t k = 1; k < d; ++k) weighted += c[k] * g[k];
        Eigen::VectorXd gu(static_cast<Eigen::Index>(d));
        gu[0] = c[0] * g[0];
        for (std::size_t l = 1; l < d; ++l)
            gu[static_cast<Eigen::Index>(l)] = c[l] * g[l] - c[l] / scale_ * weighted;
        return gu;
    }

private:
    ModelOrders orders_;
    double scale_;
};

struct Point {
    ParamVector theta;
    double f;
    std::vector<double> g;
};

std::optional<Point> evaluate_at(const ParamVector& theta, const SeriesSample& sample) {
    try {
        auto vs = evaluate(theta, sample);
        if (!std::isfinite(vs.value)) return std::nullopt;
        for (double v : vs.score)
            if (!std::isfinite(v)) return std::nullopt;
        return Point{theta, vs.value, std::move(vs.score)};
    } catch (const Error&) {
        return std::nullopt;
    }
}

bool feasible(const std::vector<double>& flat, double margin) {
    if (!(flat[0] > 0.0)) return false;
    double total = 0.0;
    for (std::size_t k = 1; k < flat.size(); ++k) {
        if (flat[k] < 0.0) return false;
        total += flat[k];
    }
    return total <= 1.0 - margin;
}

struct LocalResult {
    Point best;
    int iterations;
};

/// BFGS on the reparameterized objective.
LocalResult bfgs(Point start, const SeriesSample& sample, const Reparam& map,
                 const FitConfig& config, int budget, double handoff) {
    const auto d = static_cast<Eigen::Index>(map.dim());
    Point cur = std::move(start);
    Eigen::VectorXd u = map.to_u(cur.theta);
    // Re-evaluate at the image of u so that cur matches the chart exactly.
    if (auto re = map.to_theta(u)) {
        if (auto pt = evaluate_at(*re, sample)) cur = std::move(*pt);
    }
    Eigen::VectorXd gu = map.pull_back(cur.theta, cur.g);
    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(d, d);
    bool scaled = false;
    int stalled = 0;
    int it = 0;
    for (; it < budget; ++it) {
        // Interior optima are finished by polish(); BFGS only needs to get close.
        if (sup_norm(cur.g) <= std::max(config.tolerance, handoff)) break;
        if (gu.lpNorm<Eigen::Infinity>() <= 1e-13) break;

        Eigen::VectorXd dir = -h * gu;
        double slope = gu.dot(dir);
        if (!(slope < 0.0)) {
            h.setIdentity();
            dir = -gu;
            slope = gu.dot(dir);
        }
        double step = 1.0;
        if (!scaled) step = std::min(1.0, 1.0 / std::max(dir.lpNorm<Eigen::Infinity>(), 1e-12));

        std::optional<Point> next;
        Eigen::VectorXd u_next;
        for (int ls = 0; ls < 60; ++ls) {
            u_next = u + step * dir;
            if (auto th = map.to_theta(u_next)) {
                if (auto pt = evaluate_at(*th, sample)) {
                    if (pt->f <= cur.f + 1e-4 * step * slope) {
                        next = std::move(pt);
                        break;
                    }
                }
            }
            step *= 0.5;
        }
        if (!next) break;

        Eigen::VectorXd gu_next = map.pull_back(next->theta, next->g);
        const Eigen::VectorXd s = u_next - u;
        const Eigen::VectorXd y = gu_next - gu;
        const double sy = s.dot(y);
        if (sy > 1e-16 * s.norm() * y.norm() && sy > 0.0) {
            if (!scaled) {
                h *= sy / y.squaredNorm();
                scaled = true;
            }
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(d, d);
            h = (eye - rho * s * y.transpose()) * h * (eye - rho * y * s.transpose()) +
                rho * s * s.transpose();
        }
        const double prev_f = cur.f;
        u = u_next;
        gu = gu_next;
        cur = std::move(*next);
        stalled = (prev_f - cur.f <= 1e-15 * std::max(1.0, std::abs(cur.f))) ? stalled + 1 : 0;
        if (stalled >= 3) break;
    }
    return {std::move(cur), it};
}

/// Newton iterations directly in theta with a finite-difference Hessian of the analytic
/// score; drives interior optima to the score tolerance.
LocalResult polish(Point cur, const SeriesSample& sample, const FitConfig& config, int budget) {
    const std::size_t d = cur.theta.dim();
    const auto orders = cur.theta.orders();
    int it = 0;
    for (; it < budget; ++it) {
        const double gnorm = sup_norm(cur.g);
        if (gnorm <= config.tolerance) break;

        const auto base = cur.theta.flat();
        Eigen::MatrixXd hess(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
        bool ok = true;
        for (std::size_t c = 0; c < d && ok; ++c) {
            const double h = 1e-5 * std::max(std::abs(base[c]), 1e-3);
            auto up = base;
            auto dn = base;
            up[c] += h;
            dn[c] -= h;
            double span = 2.0 * h;
            if (!feasible(dn, 0.0)) {
                dn = base;
                span = h;
            }
            if (!feasible(up, 0.0)) {
                up = base;
                span = h;
            }
            const auto pu = evaluate_at(ParamVector::from_flat(up, orders), sample);
            const auto pd = evaluate_at(ParamVector::from_flat(dn, orders), sample);
            if (!pu || !pd) {
                ok = false;
                break;
            }
            for (std::size_t r = 0; r < d; ++r)
                hess(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                    (pu->g[r] - pd->g[r]) / span;
        }
        if (!ok) break;
        hess = 0.5 * (hess + hess.transpose()).eval();
        Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) break;
        const Eigen::VectorXd g = Eigen::Map<const Eigen::VectorXd>(cur.g.data(), static_cast<Eigen::Index>(d));
        const Eigen::VectorXd delta = ldlt.solve(-g);
        if (!delta.allFinite()) break;

        std::optional<Point> next;
        double step = 1.0;
        for (int ls = 0; ls < 30; ++ls, step *= 0.5) {
            auto trial = base;
            for (std::size_t c = 0; c < d; ++c) trial[c] += step * delta[static_cast<Eigen::Index>(c)];
            if (!feasible(trial, config.stationarity_margin)) continue;
            auto pt = evaluate_at(ParamVector::from_flat(trial, orders), sample);
            if (!pt) continue;
            const bool no_worse = pt->f <= cur.f + 1e-13 * std::max(1.0, std::abs(cur.f));
            if (no_worse && sup_norm(pt->g) < gnorm) {
                next = std::move(pt);
                break;
            }
        }
        if (!next) break;
        cur = std::move(*next);
    }
    return {std::move(cur), it};
}

std::vector<ParamVector> default_starts(const SeriesSample& sample, const ModelOrders& orders,
                                        std::size_t count) {
    const auto& x = sample.observations();
    double var = 0.0;
    for (double v : x) var += v * v;
    var /= static_cast<double>(x.size());

    // (total alpha, total beta); the last start is close to the constant-variance model.
    static constexpr double kPatterns[5][2] = {
        {0.10, 0.80}, {0.40, 0.30}, {0.05, 0.90}, {0.20, 0.50}, {0.01, 0.01}};
    std::vector<ParamVector> out;
    for (std::size_t i = 0; i < std::min<std::size_t>(count, 5); ++i) {
        double a = kPatterns[i][0];
        double b = kPatterns[i][1];
        if (orders.q() == 0) {
            a = std::min(a + b, 0.9);
            b = 0.0;
        } else if (orders.p() == 0) {
            b = std::min(a + b, 0.9);
            a = 0.0;
        }
        std::vector<double> alphas(orders.p(), orders.p() ? a / static_cast<double>(orders.p()) : 0.0);
        std::vector<double> betas(orders.q(), orders.q() ? b / static_cast<double>(orders.q()) : 0.0);
        out.emplace_back(var * (1.0 - a - b), std::move(alphas), std::move(betas));
    }
    return out;
}

}  // namespace

ValueAndScore evaluate(const ParamVector& theta, const SeriesSample& sample) {
    const auto init = garch::resolve_initial_conditions(theta, sample);
    const auto& x = sample.observations();
    const std::size_t d = theta.dim();
    double value = 0.0;
    std::vector<double> grad(d, 0.0);
    garch::detail::filter<true>(theta, init, x.size(), [&](std::size_t t, double s2, const double* g) {
        const double x2 = x[t] * x[t];
        const double ratio = x2 / s2;
        value += std::log(s2) + ratio;
        const double w = (1.0 - ratio) / s2;
        for (std::size_t c = 0; c < d; ++c) grad[c] += w * g[c];
        return x2;
    });
    const double n = static_cast<double>(x.size());
    for (double& v : grad) v /= n;
    return {value / n, std::move(grad)};
}

double neg_quasi_loglik(const ParamVector& theta, const SeriesSample& sample) {
    const auto init = garch::resolve_initial_conditions(theta, sample);
    const auto& x = sample.observations();
    double value = 0.0;
    garch::detail::filter<false>(theta, init, x.size(), [&](std::size_t t, double s2, const double*) {
        const double x2 = x[t] * x[t];
        value += std::log(s2) + x2 / s2;
        return x2;
    });
    return value / static_cast<double>(x.size());
}

std::vector<double> score(const ParamVector& theta, const SeriesSample& sample) {
    return evaluate(theta, sample).score;
}

DidNotConverge::DidNotConverge(QmlFit best)
    : Error(ErrorKind::did_not_converge,
            "QML fit did not reach the score tolerance (score sup-norm " +
                std::to_string(best.score_norm) + ")"),
      best_(std::move(best)) {}

QmlFit qmle_fit_best(const SeriesSample& sample, const ModelOrders& orders, const FitConfig& config) {
    const auto& x = sample.observations();
    if (x.size() <= orders.dim()) {
        throw Error(ErrorKind::degenerate_data, "QML fit needs more than " +
                                                    std::to_string(orders.dim()) + " observations");
    }
    if (std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0; }))
        throw Error(ErrorKind::degenerate_data, "series is identically zero");

    const Reparam map(orders, config.stationarity_margin);
    std::vector<ParamVector> starts = config.extra_starts;
    for (auto& s : default_starts(sample, orders, config.default_starts)) starts.push_back(std::move(s));

    std::optional<Point> best;
    bool best_converged = false;
    int iterations = 0;
    for (const auto& start : starts) {
        if (start.orders() != orders) {
            throw Error(ErrorKind::dimension_mismatch, "starting point has the wrong orders");
        }
        const int budget = config.max_iterations - iterations;
        if (budget <= 0) break;

        auto pt = evaluate_at(start, sample);
        LocalResult local{pt ? *pt : Point{start, kInf, {}}, 0};
        const bool start_ok = pt && feasible(start.flat(), config.stationarity_margin);
        if (start_ok && sup_norm(pt->g) <= config.tolerance) {
            local = {std::move(*pt), 0};
        } else {
            if (!pt) {
                // Infeasible or non-finite start; enter through the chart at its projection.
                auto moved = map.to_theta(map.to_u(start));
                if (!moved) continue;
                pt = evaluate_at(*moved, sample);
                if (!pt) continue;
            }
            constexpr int kPolishReserve = 20;
            local = bfgs(std::move(*pt), sample, map, config, std::max(1, budget - kPolishReserve), 1e-5);
            int used = local.iterations;
            if (sup_norm(local.best.g) > config.tolerance && used < budget) {
                auto polished = polish(local.best, sample, config, std::min(kPolishReserve, budget - used));
                used += polished.iterations;
                local = {std::move(polished.best), used};
                // Newton can stall short of the tolerance away from the optimum; resume BFGS once.
                if (sup_norm(local.best.g) > config.tolerance && used < budget) {
                    auto more = bfgs(local.best, sample, map, config, budget - used, 0.0);
                    used += more.iterations;
                    local = {std::move(more.best), used};
                }
            }
        }
        iterations += local.iterations;
        const bool conv = sup_norm(local.best.g) <= config.tolerance;
        const bool better = !best || local.best.f < best->f - 1e-12 * std::max(1.0, std::abs(best->f)) ||
                            (conv && !best_converged && local.best.f <= best->f + 1e-12 * std::max(1.0, std::abs(best->f)));
        if (better) {
            best = std::move(local.best);
            best_converged = conv;
        }
    }
    if (!best) throw Error(ErrorKind::degenerate_data, "no feasible starting point");
    const double gnorm = sup_norm(best->g);
    return QmlFit{best->theta, best->f, gnorm, gnorm <= config.tolerance, iterations};
}

QmlFit qmle_fit(const SeriesSample& sample, const ModelOrders& orders, const FitConfig& config) {
    auto fit = qmle_fit_best(sample, orders, config);
    if (!fit.converged) throw DidNotConverge(std::move(fit));
    return fit;
}

CovarianceEstimate asymptotic_covariance(const ParamVector& theta_hat, const SeriesSample& sample) {
    const auto init = garch::resolve_initial_conditions(theta_hat, sample);
    const auto& x = sample.observations();
    const auto d = static_cast<Eigen::Index>(theta_hat.dim());
    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(d, d);
    std::vector<double> eps(x.size());
    garch::detail::filter<true>(theta_hat, init, x.size(), [&](std::size_t t, double s2, const double* g) {
        const Eigen::Map<const Eigen::VectorXd> grad(g, d);
        info.noalias() += grad * grad.transpose() / (s2 * s2);
        eps[t] = x[t] / std::sqrt(s2);
        return x[t] * x[t];
    });
    info /= static_cast<double>(x.size());

    const auto z = garch::standardize(eps);
    double kappa = 0.0;
    for (double v : z) kappa += v * v * v * v;
    kappa /= static_cast<double>(z.size());
    if (kappa <= 1.0 + 1e-6) {
        throw Error(ErrorKind::singular_information,
                    "residual fourth moment " + std::to_string(kappa) + " is too close to 1");
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info);
    const auto& ev = eig.eigenvalues();
    if (eig.info() != Eigen::Success || !(ev.minCoeff() > 1e-12 * ev.maxCoeff())) {
        throw Error(ErrorKind::singular_information, "information matrix is singular");
    }
    Eigen::MatrixXd inv = eig.eigenvectors() * ev.cwiseInverse().asDiagonal() *
                          eig.eigenvectors().transpose();
    Eigen::MatrixXd gamma = (kappa - 1.0) * inv;
    gamma = 0.5 * (gamma + gamma.transpose()).eval();
    return {std::move(gamma), kappa};
}

}  // namespace gscope::qml
