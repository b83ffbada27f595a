#pragma once

#include <map>
#include <string>
#include <vector>

#include "uemb/analysis.hpp"
#include "uemb/baselines.hpp"
#include "uemb/classify_eval.hpp"
#include "uemb/cluster_eval.hpp"
#include "uemb/sgns.hpp"
#include "uemb/trainer.hpp"
#include "uemb/vocab.hpp"

namespace uemb {

// Embedding file, version v1:
//   <kind> <count> <dim> v1
//   <entity-id> <f_1> ... <f_dim>      (9 significant digits)
// Entity ids are percent-escaped; load validates the header, row count,
// per-row dimension and id uniqueness.
void save_embeddings(const EmbeddingTable& table, const std::vector<std::string>& ids,
                     const std::string& path);
void save_embeddings(const UserEmbeddings& embeddings, const std::string& path);

struct LoadedEmbeddings {
  TableKind kind = TableKind::user;
  int dim = 0;
  std::vector<std::string> ids;
  std::vector<std::vector<double>> vectors;

  UserEmbeddings as_user_embeddings(EmbeddingMethod method) const;
};
LoadedEmbeddings load_embeddings(const std::string& path);

// Reports as CSV.
void write_cluster_report_csv(const ClusterReport& report, const std::string& path);
void write_classify_report_csv(const ClassifyReport& report, const std::string& path);
void write_matrix_csv(const DomainMatrix& matrix, const std::string& path);
void write_cluster_labels_csv(const ClusterReport& report,
                              const std::vector<std::string>& user_ids, const std::string& path);

// Line-delimited training progress records:
//   {"epoch":1,"task":"word_word","mean_loss":...,"pairs":...}
void write_train_stats_jsonl(const TrainStats& stats, const std::string& path);

// Mean-centered projection of user vectors onto their top-2 principal
// components; CSV columns user_id,x,y,genres (genres joined by '|').
void export_2d(const UserEmbeddings& embeddings, const EntityIndex& index,
               const std::string& path);

// Reproducibility manifest: tool version, subcommand, config hash, per-input
// file hashes. Deterministic content (no timestamps).
void write_manifest(const std::string& out_dir, const std::string& subcommand,
                    const std::map<std::string, std::string>& config,
                    const std::vector<std::string>& input_paths);

}  // namespace uemb
