#include "gazebench/embedding.hpp"

#include <cmath>

#include "gazebench/container.hpp"
#include "gazebench/errors.hpp"

namespace gazebench {

void validate_embedding(const MultimodalEmbedding& m) {
  if (m.grid_h <= 0 || m.grid_w <= 0) {
    throw ValidationError("embedding: grid dimensions must be positive");
  }
  if (m.patches.rows() != static_cast<Eigen::Index>(m.grid_h) * m.grid_w) {
    throw ValidationError("embedding: patch count does not match grid shape");
  }
  if (!m.patches.allFinite()) {
    throw ValidationError("embedding: non-finite patch values");
  }
}

Eigen::MatrixXd positional_encoding_2d(int grid_h, int grid_w, int d) {
  if (d % 4 != 0) {
    throw ValidationError("positional_encoding_2d: d must be divisible by 4");
  }
  if (grid_h <= 0 || grid_w <= 0) {
    throw ValidationError("positional_encoding_2d: grid dimensions must be positive");
  }
  const int half = d / 2;
  Eigen::MatrixXd pe(static_cast<Eigen::Index>(grid_h) * grid_w, d);
  for (int row = 0; row < grid_h; ++row) {
    for (int col = 0; col < grid_w; ++col) {
      const Eigen::Index p = static_cast<Eigen::Index>(row) * grid_w + col;
      for (int k = 0; k < half / 2; ++k) {
        const double freq = std::pow(10000.0, -2.0 * k / static_cast<double>(half));
        pe(p, 2 * k) = std::sin(row * freq);
        pe(p, 2 * k + 1) = std::cos(row * freq);
        pe(p, half + 2 * k) = std::sin(col * freq);
        pe(p, half + 2 * k + 1) = std::cos(col * freq);
      }
    }
  }
  return pe;
}

FileEmbeddingProvider::FileEmbeddingProvider(const std::string& path) {
  const TensorContainer container = read_container(path);
  if (container.kind != "embeddings") {
    throw ValidationError("'" + path + "': expected an embeddings container, got kind '" +
                          container.kind + "'");
  }
  const auto& cases = container.meta.at("cases");
  if (cases.size() != container.tensors.size()) {
    throw ValidationError("'" + path + "': case list and tensor count differ");
  }
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const std::string case_id = cases[i].at("case_id").get<std::string>();
    MultimodalEmbedding m;
    m.grid_h = cases[i].at("grid_h").get<int>();
    m.grid_w = cases[i].at("grid_w").get<int>();
    const NamedTensor& t = container.tensors[i];
    if (t.shape.size() != 2) {
      throw ValidationError("'" + path + "': tensor '" + t.name + "' is not 2D");
    }
    m.patches.resize(t.shape[0], t.shape[1]);
    for (Eigen::Index r = 0; r < m.patches.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.patches.cols(); ++c) {
        m.patches(r, c) = static_cast<double>(
            t.data[static_cast<std::size_t>(r) * static_cast<std::size_t>(m.patches.cols()) +
                   static_cast<std::size_t>(c)]);
      }
    }
    validate_embedding(m);
    if (!embeddings_.emplace(case_id, std::move(m)).second) {
      throw ValidationError("'" + path + "': duplicate case_id '" + case_id + "'");
    }
    order_.push_back(case_id);
  }
}

MultimodalEmbedding FileEmbeddingProvider::embedding_for(const std::string& case_id) const {
  const auto it = embeddings_.find(case_id);
  if (it == embeddings_.end()) {
    throw ValidationError("no embedding for case '" + case_id + "'");
  }
  return it->second;
}

std::vector<std::string> FileEmbeddingProvider::case_ids() const { return order_; }

void save_embeddings(const std::string& path,
                     const std::vector<std::pair<std::string, MultimodalEmbedding>>& cases) {
  TensorContainer container;
  container.kind = "embeddings";
  nlohmann::json case_list = nlohmann::json::array();
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& [case_id, m] = cases[i];
    validate_embedding(m);
    case_list.push_back({{"case_id", case_id}, {"grid_h", m.grid_h}, {"grid_w", m.grid_w}});
    NamedTensor t;
    t.name = "case_" + std::to_string(i);
    t.shape = {m.patches.rows(), m.patches.cols()};
    t.data.resize(static_cast<std::size_t>(m.patches.size()));
    for (Eigen::Index r = 0; r < m.patches.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.patches.cols(); ++c) {
        t.data[static_cast<std::size_t>(r) * static_cast<std::size_t>(m.patches.cols()) +
               static_cast<std::size_t>(c)] = static_cast<float>(m.patches(r, c));
      }
    }
    container.tensors.push_back(std::move(t));
  }
  container.meta["cases"] = case_list;
  write_container(path, container);
}

}  // namespace gazebench
