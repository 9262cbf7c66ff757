#include "gazebench/corpus.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gazebench/container.hpp"
#include "gazebench/errors.hpp"

namespace gazebench {

namespace {

using nlohmann::json;

void check_manifest_counts(const CorpusManifest& m) {
  if (m.total < 0 || m.train < 0 || m.test < 0) {
    throw ValidationError("manifest: counts must be non-negative");
  }
  if (m.train + m.test != m.total) {
    throw ValidationError("manifest: train + test = " + std::to_string(m.train + m.test) +
                          " does not equal total " + std::to_string(m.total));
  }
}

CorpusManifest parse_manifest_line(const json& j) {
  CorpusManifest m;
  if (j.value("type", std::string{}) != "manifest") {
    throw ValidationError("first record must have \"type\": \"manifest\"");
  }
  m.dataset_name = j.at("dataset_name").get<std::string>();
  m.format_version = j.at("format_version").get<int>();
  if (m.format_version != 1) {
    throw ValidationError("unsupported format_version " + std::to_string(m.format_version));
  }
  m.total = j.at("total").get<int>();
  m.train = j.at("train").get<int>();
  m.test = j.at("test").get<int>();
  check_manifest_counts(m);
  return m;
}

}  // namespace

Corpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open corpus '" + path + "'");

  Corpus corpus;
  std::string line;
  std::size_t line_no = 0;
  bool have_manifest = false;
  int seen_train = 0, seen_test = 0;
  std::set<std::string> seen_ids;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string ctx = "line " + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ValidationError(ctx + ": invalid JSON: " + e.what());
    }

    try {
      if (!have_manifest) {
        corpus.manifest = parse_manifest_line(j);
        have_manifest = true;
        continue;
      }

      Scanpath s;
      s.case_id = j.at("case_id").get<std::string>();
      if (!seen_ids.insert(s.case_id).second) {
        throw ValidationError("duplicate case_id '" + s.case_id + "'");
      }
      const int w = j.at("image_width").get<int>();
      const int h = j.at("image_height").get<int>();
      const std::string split = j.at("split").get<std::string>();
      if (split == "train") {
        ++seen_train;
      } else if (split == "test") {
        ++seen_test;
      } else {
        throw ValidationError("split must be 'train' or 'test', got '" + split + "'");
      }
      std::vector<PixelFixation> fixations;
      for (const auto& fj : j.at("fixations")) {
        fixations.push_back({fj.at("x_px").get<double>(), fj.at("y_px").get<double>(),
                             fj.at("duration_ms").get<double>()});
      }
      s = normalize_scanpath(fixations, w, h, s.case_id,
                             j.value("report_text", std::string{}));
      corpus.manifest.cases.push_back({s.case_id, split});
      corpus.cases.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw ValidationError(ctx + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(ctx + ": " + e.what());
    }
  }

  if (!have_manifest) throw ValidationError("'" + path + "': no records");
  if (static_cast<int>(corpus.cases.size()) != corpus.manifest.total) {
    throw ValidationError("manifest total " + std::to_string(corpus.manifest.total) +
                          " does not match " + std::to_string(corpus.cases.size()) +
                          " case records");
  }
  if (seen_train != corpus.manifest.train || seen_test != corpus.manifest.test) {
    throw ValidationError("manifest split counts (train " +
                          std::to_string(corpus.manifest.train) + ", test " +
                          std::to_string(corpus.manifest.test) + ") do not match records (train " +
                          std::to_string(seen_train) + ", test " + std::to_string(seen_test) +
                          ")");
  }
  return corpus;
}

std::string corpus_to_jsonl(const Corpus& corpus) {
  if (corpus.cases.size() != corpus.manifest.cases.size()) {
    throw ValidationError("corpus: manifest case list out of sync with cases");
  }
  check_manifest_counts(corpus.manifest);
  if (static_cast<int>(corpus.cases.size()) != corpus.manifest.total) {
    throw ValidationError("corpus: manifest total does not match case count");
  }

  std::ostringstream out;
  json mj = {{"type", "manifest"},
             {"dataset_name", corpus.manifest.dataset_name},
             {"format_version", corpus.manifest.format_version},
             {"total", corpus.manifest.total},
             {"train", corpus.manifest.train},
             {"test", corpus.manifest.test}};
  out << mj.dump() << '\n';

  for (std::size_t i = 0; i < corpus.cases.size(); ++i) {
    const Scanpath& s = corpus.cases[i];
    validate_scanpath(s);
    json fixations = json::array();
    for (const Fixation& f : s.fixations) {
      fixations.push_back({{"x_px", f.x * s.image_width},
                           {"y_px", f.y * s.image_height},
                           {"duration_ms", f.duration_ms}});
    }
    json cj = {{"case_id", s.case_id},
               {"image_width", s.image_width},
               {"image_height", s.image_height},
               {"report_text", s.report_text},
               {"split", corpus.manifest.cases[i].split},
               {"fixations", fixations}};
    out << cj.dump() << '\n';
  }
  return out.str();
}

void save_corpus(const std::string& path, const Corpus& corpus) {
  atomic_write_file(path, corpus_to_jsonl(corpus));
}

std::vector<std::size_t> split_indices(const Corpus& corpus, const std::string& split) {
  if (split != "train" && split != "test" && split != "all") {
    throw ValidationError("split must be 'train', 'test', or 'all'");
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < corpus.cases.size(); ++i) {
    if (split == "all" || corpus.manifest.cases[i].split == split) out.push_back(i);
  }
  return out;
}

void truncate_corpus(Corpus& corpus, int max_fixations) {
  if (max_fixations < 1) throw ValidationError("max_fixations must be >= 1");
  for (Scanpath& s : corpus.cases) {
    if (static_cast<int>(s.fixations.size()) > max_fixations) {
      s.fixations.resize(static_cast<std::size_t>(max_fixations));
    }
  }
}

}  // namespace gazebench
