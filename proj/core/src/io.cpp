#include "uemb/io.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <json.hpp>

#include "field_escape.hpp"
#include "uemb/error.hpp"
#include "uemb/hashing.hpp"

namespace uemb {

using detail::escape_field;
using detail::unescape_field;

namespace {

constexpr const char* kEmbeddingVersion = "v1";

TableKind parse_table_kind(const std::string& s, const std::string& path) {
  if (s == "word") return TableKind::word;
  if (s == "user") return TableKind::user;
  if (s == "item") return TableKind::item;
  throw_data(path + ": unknown embedding kind \"" + s + "\"");
}

// 9 significant digits; enough that save(load(save(x))) is byte-stable.
std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void write_embedding_rows(std::ofstream& out, TableKind kind, std::size_t count, int dim,
                          const std::function<const double*(std::size_t)>& row,
                          const std::vector<std::string>& ids, const std::string& path) {
  out << to_string(kind) << ' ' << count << ' ' << dim << ' ' << kEmbeddingVersion << '\n';
  for (std::size_t r = 0; r < count; ++r) {
    out << escape_field(ids[r]);
    const double* v = row(r);
    for (int d = 0; d < dim; ++d) out << ' ' << format_value(v[d]);
    out << '\n';
  }
  if (!out) throw_io("failed writing embedding file: " + path);
}

}  // namespace

void save_embeddings(const EmbeddingTable& table, const std::vector<std::string>& ids,
                     const std::string& path) {
  if (ids.size() != table.rows()) {
    throw_data("embedding table has " + std::to_string(table.rows()) + " rows but " +
               std::to_string(ids.size()) + " ids were supplied");
  }
  std::ofstream out(path);
  if (!out) throw_io("cannot write embedding file: " + path);
  write_embedding_rows(
      out, table.kind(), table.rows(), table.dim(),
      [&](std::size_t r) { return table.row(r).data(); }, ids, path);
}

void save_embeddings(const UserEmbeddings& embeddings, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw_io("cannot write embedding file: " + path);
  write_embedding_rows(
      out, TableKind::user, embeddings.size(), embeddings.dim,
      [&](std::size_t r) { return embeddings.vectors[r].data(); }, embeddings.user_ids, path);
}

LoadedEmbeddings load_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open embedding file: " + path);

  std::string header;
  if (!std::getline(in, header)) throw_data(path + ": empty embedding file");
  std::istringstream hs(header);
  std::string kind_str, version;
  std::size_t count = 0;
  int dim = 0;
  if (!(hs >> kind_str >> count >> dim >> version) || version != kEmbeddingVersion || dim < 1) {
    throw_data(path + ": malformed embedding header \"" + header + "\"");
  }

  LoadedEmbeddings loaded;
  loaded.kind = parse_table_kind(kind_str, path);
  loaded.dim = dim;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 1;
  while (loaded.ids.size() < count) {
    if (!std::getline(in, line)) {
      throw_data(path + ": header claims " + std::to_string(count) + " rows, file ends after " +
                 std::to_string(loaded.ids.size()));
    }
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string id;
    ls >> id;
    id = unescape_field(id);
    if (!seen.insert(id).second) {
      throw_data(path + ": duplicate entity id \"" + id + "\" at line " + std::to_string(line_no));
    }
    std::vector<double> vec;
    vec.reserve(static_cast<std::size_t>(dim));
    double v = 0.0;
    while (ls >> v) vec.push_back(v);
    if (vec.size() != static_cast<std::size_t>(dim)) {
      throw_data(path + ": line " + std::to_string(line_no) + " has " +
                 std::to_string(vec.size()) + " values, expected " + std::to_string(dim));
    }
    loaded.ids.push_back(std::move(id));
    loaded.vectors.push_back(std::move(vec));
  }
  return loaded;
}

UserEmbeddings LoadedEmbeddings::as_user_embeddings(EmbeddingMethod method) const {
  UserEmbeddings out;
  out.method = method;
  out.dim = dim;
  std::vector<std::size_t> order(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
  for (std::size_t i : order) {
    out.user_ids.push_back(ids[i]);
    out.vectors.push_back(vectors[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw_io("cannot write report file: " + path);
  return out;
}

}  // namespace

void write_cluster_report_csv(const ClusterReport& report, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "method,k,f1,precision,recall,tp,fp,fn,tn\n";
  for (const auto& e : report.entries) {
    out << csv_escape(report.method) << ',' << e.k << ',' << format_value(e.confusion.f1()) << ','
        << format_value(e.confusion.precision()) << ',' << format_value(e.confusion.recall())
        << ',' << e.confusion.tp << ',' << e.confusion.fp << ',' << e.confusion.fn << ','
        << e.confusion.tn << '\n';
  }
}

void write_cluster_labels_csv(const ClusterReport& report,
                              const std::vector<std::string>& user_ids, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "user_id";
  for (const auto& e : report.entries) out << ",k" << e.k;
  out << '\n';
  for (std::size_t i = 0; i < user_ids.size(); ++i) {
    out << csv_escape(user_ids[i]);
    for (const auto& e : report.entries) out << ',' << e.labels[i];
    out << '\n';
  }
}

void write_classify_report_csv(const ClassifyReport& report, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "method,dataset,average,class,precision,recall,f1,support\n";
  const char* avg = report.average == Average::weighted ? "weighted" : "macro";
  out << csv_escape(report.method) << ',' << csv_escape(report.dataset) << ',' << avg << ",all,"
      << format_value(report.precision) << ',' << format_value(report.recall) << ','
      << format_value(report.f1) << ",\n";
  for (const ClassMetrics& m : report.per_class) {
    out << csv_escape(report.method) << ',' << csv_escape(report.dataset) << ',' << avg << ','
        << to_string(static_cast<Sentiment>(m.label)) << ',' << format_value(m.precision) << ','
        << format_value(m.recall) << ',' << format_value(m.f1) << ',' << m.support << '\n';
  }
}

void write_matrix_csv(const DomainMatrix& matrix, const std::string& path) {
  std::ofstream out = open_out(path);
  out << (matrix.kind == DomainMatrix::Kind::overlap ? "overlap" : "crossgroup_f1");
  for (const std::string& l : matrix.labels) out << ',' << csv_escape(l);
  out << '\n';
  for (Eigen::Index i = 0; i < matrix.values.rows(); ++i) {
    out << csv_escape(matrix.labels[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < matrix.values.cols(); ++j) {
      out << ',' << format_value(matrix.values(i, j));
    }
    out << '\n';
  }
}

void write_train_stats_jsonl(const TrainStats& stats, const std::string& path) {
  std::ofstream out = open_out(path);
  for (std::size_t e = 0; e < stats.epochs.size(); ++e) {
    for (TaskKind task : kAllTasks) {
      const TaskStats& ts = stats.epochs[e].task(task);
      if (ts.pairs == 0) continue;
      nlohmann::json rec;
      rec["epoch"] = e + 1;
      rec["task"] = to_string(task);
      rec["mean_loss"] = ts.mean_loss();
      rec["pairs"] = ts.pairs;
      out << rec.dump() << '\n';
    }
    nlohmann::json total;
    total["epoch"] = e + 1;
    total["task"] = "total";
    total["mean_loss"] = stats.epochs[e].mean_total_loss();
    total["pairs"] = stats.epochs[e].total_pairs();
    out << total.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------
// 2-D export
// ---------------------------------------------------------------------------

void export_2d(const UserEmbeddings& embeddings, const EntityIndex& index,
               const std::string& path) {
  const auto n = static_cast<Eigen::Index>(embeddings.size());
  if (n < 2) throw_data("2-D export needs at least two users");
  const Eigen::Index d = embeddings.dim;

  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      x(i, j) = embeddings.vectors[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  x.rowwise() -= x.colwise().mean();

  Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw_numeric("PCA eigendecomposition failed");
  // Columns ascend by eigenvalue; take the last two (top components).
  Eigen::MatrixXd pcs = solver.eigenvectors().rightCols(2).rowwise().reverse();
  // Deterministic sign: make the largest-magnitude loading positive.
  for (int c = 0; c < 2; ++c) {
    Eigen::Index at = 0;
    pcs.col(c).cwiseAbs().maxCoeff(&at);
    if (pcs(at, c) < 0) pcs.col(c) = -pcs.col(c);
  }
  Eigen::MatrixXd proj = x * pcs;

  std::ofstream out = open_out(path);
  out << "user_id,x,y,genres\n";
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::string& user = embeddings.user_ids[static_cast<std::size_t>(i)];
    std::string genres;
    const auto it = index.user_to_id.find(user);
    if (it != index.user_to_id.end()) {
      const auto& gs = index.user_genres[static_cast<std::size_t>(it->second)];
      for (std::size_t g = 0; g < gs.size(); ++g) {
        if (g) genres += '|';
        genres += gs[g];
      }
    }
    out << csv_escape(user) << ',' << format_value(proj(i, 0)) << ',' << format_value(proj(i, 1))
        << ',' << csv_escape(genres) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

void write_manifest(const std::string& out_dir, const std::string& subcommand,
                    const std::map<std::string, std::string>& config,
                    const std::vector<std::string>& input_paths) {
  std::ostringstream cfg;
  for (const auto& [k, v] : config) cfg << k << " = " << v << '\n';

  const std::filesystem::path dir(out_dir);
  std::ofstream out(dir / "manifest.txt");
  if (!out) throw_io("cannot write manifest in " + out_dir);
  out << "uemb-manifest v1\n";
  out << "tool_version = 0.1.0\n";
  out << "subcommand = " << subcommand << '\n';
  out << "config_sha256 = " << sha256_hex(cfg.str()) << '\n';
  for (const auto& [k, v] : config) out << "config." << k << " = " << v << '\n';
  for (const std::string& p : input_paths) {
    out << "input " << escape_field(p) << " sha256 " << file_sha256(p) << '\n';
  }
  if (!out) throw_io("failed writing manifest in " + out_dir);
}

}  // namespace uemb
