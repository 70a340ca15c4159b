// Serial reference vs OpenMP kernels: one Bellman sweep and a Monte-Carlo
// batch on a 35-node delivery task. Thread count comes from OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <memory>
#include <vector>

#include "famsec/delivery.hpp"
#include "famsec/mdp.hpp"
#include "famsec/rollout.hpp"

namespace {

using namespace famsec;

DeliveryTask bench_task() {
  auto net = generate_network(GeneratorKind::WattsStrogatz, 35, GeneratorParams{}, 35);
  DeliveryTask t{std::move(net), 0, 17, 34, 0.7, Rewards{}, 0.95, 50};
  return t;
}

const RolloutTarget& target() {
  static const RolloutTarget t = make_rollout_target(bench_task());
  return t;
}

const Policy& policy() {
  static const Policy p = make_tabular_policy(*target().spec, value_iteration(*target().spec).greedy_policy);
  return p;
}

template <double (*Sweep)(const MdpSpec&, std::span<const double>, std::span<double>)>
void bm_sweep(benchmark::State& state) {
  const auto& spec = *target().spec;
  std::vector<double> in(spec.state_count(), 1.0);
  std::vector<double> out(spec.state_count());
  for (auto _ : state) {
    benchmark::DoNotOptimize(Sweep(spec, in, out));
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(spec.state_count()));
}

template <RewardSamples (*Mc)(const RolloutTarget&, const Policy&, int, std::uint64_t)>
void bm_monte_carlo(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(Mc(target(), policy(), m, 1));
  state.SetItemsProcessed(state.iterations() * m);
}

}  // namespace

BENCHMARK(bm_sweep<famsec::reference::bellman_sweep>)->Name("bellman_sweep/serial");
BENCHMARK(bm_sweep<famsec::kernels::bellman_sweep>)->Name("bellman_sweep/openmp");
BENCHMARK(bm_monte_carlo<famsec::reference::monte_carlo>)->Name("monte_carlo/serial")->Arg(2000);
BENCHMARK(bm_monte_carlo<famsec::monte_carlo>)->Name("monte_carlo/openmp")->Arg(2000);

BENCHMARK_MAIN();
