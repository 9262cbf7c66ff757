#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace gazebench {

// Patch-level conditioning input: P vectors of width d laid out on a
// grid_h x grid_w grid.
struct MultimodalEmbedding {
  Eigen::MatrixXd patches;  // P x d
  int grid_h = 0;
  int grid_w = 0;
};

void validate_embedding(const MultimodalEmbedding& m);

// Fixed 2D sinusoidal encodings: channels [0, d/2) encode the row index,
// [d/2, d) the column index, interleaved sin/cos at geometric frequencies.
// d must be divisible by 4.
Eigen::MatrixXd positional_encoding_2d(int grid_h, int grid_w, int d);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual MultimodalEmbedding embedding_for(const std::string& case_id) const = 0;
  virtual std::vector<std::string> case_ids() const = 0;
};

// Loads precomputed embeddings from a tensor container.
class FileEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit FileEmbeddingProvider(const std::string& path);
  MultimodalEmbedding embedding_for(const std::string& case_id) const override;
  std::vector<std::string> case_ids() const override;

 private:
  std::vector<std::string> order_;
  std::map<std::string, MultimodalEmbedding> embeddings_;
};

void save_embeddings(const std::string& path,
                     const std::vector<std::pair<std::string, MultimodalEmbedding>>& cases);

}  // namespace gazebench
