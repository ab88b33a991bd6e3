#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "asmqa/corpus.hpp"

namespace asmqa::testkit {

/// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// Random string of CJK ideographs drawn from the first `alphabet` code points of the block.
std::string random_cjk(std::mt19937_64& g, std::size_t length, std::size_t alphabet = 200);

std::vector<double> random_vector(std::mt19937_64& g, std::size_t dim);

struct ToyOptions {
    std::size_t dim = 8;
    std::size_t min_positives = 1;
    std::size_t max_positives = 3;
    std::size_t min_negatives = 4;
    std::size_t max_negatives = 10;
    std::size_t min_doc_chars = 10;
    std::size_t max_doc_chars = 60;
    std::string source = "toy";
    bool embeddings = true;
};

/// Synthetic corpus; every record has unique docs, ids "r<i>", "r<i>-p<j>", "r<i>-n<j>".
CorpusStore toy_store(std::size_t n_records, std::uint64_t seed, const ToyOptions& options = {});

}  // namespace asmqa::testkit
