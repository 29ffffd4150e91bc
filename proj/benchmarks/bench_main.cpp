#include <benchmark/benchmark.h>

// The packaged benchmark_main archive carries LTO bytecode from another GCC.
BENCHMARK_MAIN();
