#include "vpecg/errors.h"
#include "vpecg/pipeline.h"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace vpecg {

namespace {

constexpr std::size_t kGenes = NonlinearParams::size;
using Genome = std::array<double, kGenes>;

struct Individual {
    Genome genes{};
    double fitness = std::numeric_limits<double>::infinity();
};

}  // namespace

NonlinearParams ga_init(const BeatSignal& beat, const ModelBounds& bounds, const GaConfig& ga,
                        const OptimizerConfig& opt, const ModelOptions& opts) {
    if (ga.population < 2 || ga.generations < 0 || ga.tournament < 1 || ga.elitism < 0 ||
        ga.elitism >= ga.population) {
        throw ConfigError("invalid genetic algorithm settings");
    }
    std::array<Interval, kGenes> box;
    for (std::size_t k = 0; k < kGenes; ++k) box[k] = bounds.param_interval(k);

    std::mt19937_64 rng(ga.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<int> pick(0, ga.population - 1);

    auto evaluate = [&](Individual& ind) {
        try {
            ind.fitness = penalized_objective(NonlinearParams::from_array(ind.genes), beat, bounds, opt, opts);
        } catch (const Error&) {
            ind.fitness = std::numeric_limits<double>::infinity();
        }
    };

    std::vector<Individual> pop(static_cast<std::size_t>(ga.population));
    for (auto& ind : pop) {
        for (std::size_t k = 0; k < kGenes; ++k) ind.genes[k] = box[k].lo + unit(rng) * box[k].width();
        evaluate(ind);
    }
    auto by_fitness = [](const Individual& a, const Individual& b) { return a.fitness < b.fitness; };

    auto tournament = [&]() -> const Individual& {
        const Individual* best = &pop[static_cast<std::size_t>(pick(rng))];
        for (int i = 1; i < ga.tournament; ++i) {
            const Individual* c = &pop[static_cast<std::size_t>(pick(rng))];
            if (c->fitness < best->fitness) best = c;
        }
        return *best;
    };

    for (int gen = 0; gen < ga.generations; ++gen) {
        std::stable_sort(pop.begin(), pop.end(), by_fitness);
        std::vector<Individual> next(pop.begin(), pop.begin() + ga.elitism);
        while (next.size() < pop.size()) {
            const Individual& a = tournament();
            const Individual& b = tournament();
            Individual child;
            for (std::size_t k = 0; k < kGenes; ++k) {
                const double lo = std::min(a.genes[k], b.genes[k]);
                const double hi = std::max(a.genes[k], b.genes[k]);
                const double spread = ga.blend_alpha * (hi - lo);
                double g = (lo - spread) + unit(rng) * (hi - lo + 2.0 * spread);
                if (unit(rng) < ga.mutation_rate) g += normal(rng) * ga.mutation_sigma * box[k].width();
                child.genes[k] = box[k].clamp(g);
            }
            evaluate(child);
            next.push_back(child);
        }
        pop = std::move(next);
    }
    const auto best = std::min_element(pop.begin(), pop.end(), by_fitness);
    return NonlinearParams::from_array(best->genes);
}

NonlinearParams profile_scan(const BeatSignal& beat, const ModelBounds& bounds, const NonlinearParams& start,
                             const ScanConfig& scan, const OptimizerConfig& opt, const ModelOptions& opts) {
    if (!(scan.tau_step > 0.0) || scan.lambda_points < 2) throw ConfigError("invalid profile scan settings");
    auto objective = [&](const Genome& g) {
        try {
            return penalized_objective(NonlinearParams::from_array(g), beat, bounds, opt, opts);
        } catch (const Error&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    Genome best = start.to_array();
    double best_value = objective(best);
    for (WaveKind w : {WaveKind::p, WaveKind::t, WaveKind::qrs}) {
        const std::size_t li = 2 * static_cast<std::size_t>(w);
        const std::size_t ti = li + 1;
        const Interval lam = bounds.param_interval(li);
        const Interval tau = bounds.param_interval(ti);
        const double h = lam.width() / (scan.lambda_points - 1);
        const Genome base = best;
        const auto steps = static_cast<int>(std::floor(tau.width() / scan.tau_step));
        for (int s = 0; s <= steps; ++s) {
            Genome g = base;
            g[ti] = tau.lo + s * scan.tau_step;
            double coarse = lam.lo;
            double coarse_value = std::numeric_limits<double>::infinity();
            for (int i = 0; i < scan.lambda_points; ++i) {
                g[li] = lam.lo + i * h;
                const double v = objective(g);
                if (v < coarse_value) {
                    coarse_value = v;
                    coarse = g[li];
                }
            }
            if (!std::isfinite(coarse_value)) continue;
            auto along = [&](double l) {
                Genome c = g;
                c[li] = l;
                return objective(c);
            };
            const auto [l, v] = boost::math::tools::brent_find_minima(along, std::max(lam.lo, coarse - h),
                                                                      std::min(lam.hi, coarse + h), 20);
            g[li] = l;
            if (v < best_value) {
                best_value = v;
                best = g;
            }
        }
    }
    return NonlinearParams::from_array(best);
}

}  // namespace vpecg
