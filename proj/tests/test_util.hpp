#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "crowdlab/corpus.hpp"
#include "crowdlab/crowd.hpp"

namespace testutil {

// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("crowdlab_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  os << content;
}

inline std::string read_text(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), {});
}

// Synthetic corpus with `num_sequences` sequences of `len` tokens over
// `num_labels` labels named L0..L{T-1}; golds cycle deterministically.
inline crowdlab::Corpus make_corpus(int num_sequences, int len, int num_labels) {
  crowdlab::Corpus corpus;
  for (int t = 0; t < num_labels; ++t) corpus.labels.intern("L" + std::to_string(t));
  int k = 0;
  for (int s = 0; s < num_sequences; ++s) {
    crowdlab::Sequence seq;
    for (int j = 0; j < len; ++j, ++k) {
      crowdlab::Token tok;
      tok.surface = "w" + std::to_string(k % 7) + "_" + std::to_string(k % num_labels);
      tok.gold[0] = k % num_labels;
      seq.tokens.push_back(tok);
    }
    corpus.sequences.push_back(seq);
  }
  return corpus;
}

// Fully-covered random crowd over the corpus: each annotator labels every
// token, correct with probability `precision`, otherwise uniform over the
// other labels.
inline crowdlab::CrowdAnnotations make_crowd(const crowdlab::Corpus& corpus, int num_annotators,
                                             double precision, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int T = corpus.labels.size();
  std::uniform_int_distribution<int> other(0, T - 2);
  std::vector<crowdlab::Annotation> entries;
  std::vector<std::size_t> lengths;
  for (int s = 0; s < static_cast<int>(corpus.sequences.size()); ++s) {
    const auto& seq = corpus.sequences[static_cast<std::size_t>(s)];
    lengths.push_back(seq.tokens.size());
    for (int j = 0; j < static_cast<int>(seq.tokens.size()); ++j) {
      const int gold = seq.tokens[static_cast<std::size_t>(j)].gold[0];
      for (int l = 0; l < num_annotators; ++l) {
        int label = gold;
        if (unif(rng) >= precision) {
          label = other(rng);
          if (label >= gold) ++label;
        }
        entries.push_back({s, j, l, label});
      }
    }
  }
  return crowdlab::CrowdAnnotations::build(entries, lengths, num_annotators);
}

}  // namespace testutil
