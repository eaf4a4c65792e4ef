// Minimizes a shifted, rotated 20-D Rastrigin function with QUASAR and DE.

#include <quasar/quasar.hpp>

#include <cstdio>

int main()
{
    const auto suite = quasar::bench::make_suite(20, 2017);
    const auto& rastrigin = suite[4];

    quasar::QuasarConfig qcfg;
    qcfg.g_max = 300;
    qcfg.seed = 1;
    const auto q = quasar::optimize(rastrigin, rastrigin.bounds(), qcfg);

    quasar::DeConfig dcfg;
    dcfg.g_max = 300;
    dcfg.seed = 1;
    const auto d = quasar::de_optimize(rastrigin, rastrigin.bounds(), dcfg);

    std::printf("%s, D=%zu, N=%zu, %zu generations\n", rastrigin.name().c_str(), rastrigin.dim(), qcfg.population_size(20), qcfg.g_max);
    std::printf("  QUASAR error %.6g  (%zu evaluations, %.3f s)\n", q.error, q.eval_count, q.runtime_seconds);
    std::printf("  DE     error %.6g  (%zu evaluations, %.3f s)\n", d.error, d.eval_count, d.runtime_seconds);
    return 0;
}
