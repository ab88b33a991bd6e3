#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "asmqa/assembler.hpp"
#include "asmqa/eval_harness.hpp"
#include "asmqa/negative_miner.hpp"

using namespace asmqa;

namespace {

std::string cjk(std::mt19937_64& g, std::size_t n) {
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        const char32_t c = 0x4E00 + static_cast<char32_t>(g() % 500);
        out += static_cast<char>(0xE0 | (c >> 12));
        out += static_cast<char>(0x80 | ((c >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (c & 0x3F));
    }
    return out;
}

std::vector<double> vec(std::mt19937_64& g, std::size_t dim) {
    std::normal_distribution<double> n;
    std::vector<double> v(dim);
    for (auto& x : v) x = n(g);
    return v;
}

void BM_RougeL(benchmark::State& state) {
    std::mt19937_64 g(1);
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto a = cjk(g, n), b = cjk(g, n);
    for (auto _ : state) benchmark::DoNotOptimize(rouge_l(a, b));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_RougeL)->RangeMultiplier(4)->Range(16, 4096)->Complexity(benchmark::oNSquared);

void BM_SearchTopK(benchmark::State& state) {
    std::mt19937_64 g(2);
    const auto n = static_cast<std::size_t>(state.range(0));
    std::vector<Document> docs;
    for (std::size_t i = 0; i < n; ++i) docs.push_back({"d" + std::to_string(i), "", "x", vec(g, 768)});
    const auto index = build_index(docs);
    const auto q = vec(g, 768);
    for (auto _ : state) benchmark::DoNotOptimize(search_top_k(index, q, 64));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SearchTopK)->Arg(1000)->Arg(10000)->Arg(50000);

void BM_BuildIndex(benchmark::State& state) {
    std::mt19937_64 g(3);
    std::vector<Document> docs;
    for (int i = 0; i < state.range(0); ++i) docs.push_back({"d" + std::to_string(i), "", "x", vec(g, 768)});
    for (auto _ : state) benchmark::DoNotOptimize(build_index(docs).size());
}
BENCHMARK(BM_BuildIndex)->Arg(10000);

void BM_AssembleCorpus(benchmark::State& state) {
    std::mt19937_64 g(4);
    CorpusStore store;
    for (int i = 0; i < state.range(0); ++i) {
        QARecord r;
        r.record_id = "r" + std::to_string(i);
        r.question = cjk(g, 15);
        r.gold_answers = {cjk(g, 30)};
        r.source = "bench";
        r.question_embedding = vec(g, 32);
        r.positive_docs.push_back({r.record_id + "-p", cjk(g, 400), "bench", vec(g, 32)});
        for (int j = 0; j < 20; ++j) r.candidate_negatives.push_back({r.record_id + "-n" + std::to_string(j), cjk(g, 400), "bench", vec(g, 32)});
        for (const auto& d : r.positive_docs) store.global_docs.emplace(d.doc_id, d);
        for (const auto& d : r.candidate_negatives) store.global_docs.emplace(d.doc_id, d);
        store.records.push_back(std::move(r));
    }
    const auto indices = build_indices(store, true);
    AssemblyInputs in;
    in.indices = &indices;
    in.plan.negatives_per_sample = 12;
    for (auto _ : state) benchmark::DoNotOptimize(assemble_corpus(store, in).samples.size());
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_AssembleCorpus)->Arg(500)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
