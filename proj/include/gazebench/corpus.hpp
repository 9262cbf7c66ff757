#pragma once

#include <string>
#include <vector>

#include "gazebench/scanpath.hpp"

namespace gazebench {

struct ManifestEntry {
  std::string case_id;
  std::string split;  // "train" or "test"
};

// First line of a corpus file. train + test must equal total, and the case
// list must partition accordingly.
struct CorpusManifest {
  std::string dataset_name;
  int format_version = 1;
  int total = 0;
  int train = 0;
  int test = 0;
  std::vector<ManifestEntry> cases;
};

struct Corpus {
  CorpusManifest manifest;
  std::vector<Scanpath> cases;  // aligned with manifest.cases
};

// JSON-lines: one manifest record, then one case record per line with
// explicit pixel coordinates. Validation failures name the line.
Corpus load_corpus(const std::string& path);
void save_corpus(const std::string& path, const Corpus& corpus);
std::string corpus_to_jsonl(const Corpus& corpus);

// Cases restricted to one split ("train", "test", or "all").
std::vector<std::size_t> split_indices(const Corpus& corpus, const std::string& split);

// Drops fixations beyond max_fixations on every case.
void truncate_corpus(Corpus& corpus, int max_fixations);

}  // namespace gazebench
