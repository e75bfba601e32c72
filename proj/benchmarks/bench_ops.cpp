#include <benchmark/benchmark.h>

#include "fmbeam/autograd.hpp"
#include "fmbeam/rng.hpp"

using namespace fmbeam;

namespace {

Tensor random(std::size_t r, std::size_t c, Rng& rng) {
  Tensor t = Tensor::zeros(r, c);
  for (auto& v : t.values()) v = rng.uniform(-1.0, 1.0);
  return t;
}

void BM_MatmulForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Tensor a = random(n, n, rng), b = random(n, n, rng);
  for (auto _ : state) {
    Tape tape(nullptr, false);
    benchmark::DoNotOptimize(tape.value(matmul(tape.constant(a), tape.constant(b))).data().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_MatmulForward)->Arg(32)->Arg(128)->Arg(256);

void BM_MatmulBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  const Tensor a = random(n, n, rng), b = random(n, n, rng);
  for (auto _ : state) {
    Tape tape;
    Var x = tape.leaf(a, true);
    Var y = tape.leaf(b, true);
    tape.backward(sum(matmul(x, y)));
    benchmark::DoNotOptimize(tape.grad(x).data().data());
  }
}
BENCHMARK(BM_MatmulBackward)->Arg(32)->Arg(128);

void BM_Attention(benchmark::State& state) {
  const std::size_t batch = 32, seq = 8, dim = 128;
  Rng rng(3);
  const Tensor q = random(batch * seq, dim, rng), k = random(batch * seq, dim, rng),
               v = random(batch * seq, dim, rng);
  for (auto _ : state) {
    Tape tape(nullptr, false);
    Var out = attention(tape.constant(q), tape.constant(k), tape.constant(v), batch, seq, 4);
    benchmark::DoNotOptimize(tape.value(out).data().data());
  }
}
BENCHMARK(BM_Attention);

void BM_SoftmaxRows(benchmark::State& state) {
  Rng rng(4);
  const Tensor x = random(256, 32, rng);
  for (auto _ : state) {
    Tape tape(nullptr, false);
    benchmark::DoNotOptimize(tape.value(softmax_rows(tape.constant(x))).data().data());
  }
}
BENCHMARK(BM_SoftmaxRows);

}  // namespace

BENCHMARK_MAIN();
