#include "urlsentry/models/model_io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>

#include "urlsentry/error.hpp"

namespace urlsentry {

namespace {

std::string num(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

[[noreturn]] void corrupt(const std::string& what) { throw Error(ErrorCode::CorruptModel, "corrupt model: " + what); }

double parse_double(const std::string& text) {
  double v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) corrupt("bad number '" + text + "'");
  return v;
}

long long parse_int(const std::string& text) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) corrupt("bad integer '" + text + "'");
  return v;
}

// --- writing ---------------------------------------------------------------

void write_tree(std::ostream& out, const Tree& tree) {
  out << "tree " << tree.nodes.size() << '\n';
  for (const auto& n : tree.nodes) {
    out << "node " << n.feature << ' ' << num(n.threshold) << ' ' << n.left << ' ' << n.right << ' ' << num(n.value)
        << ' ' << num(n.weight) << ' ' << num(n.gain) << '\n';
  }
}

void write_config(std::ostream& out, const DecisionTreeParams& p) { out << "config max_depth " << p.max_depth << '\n'; }

void write_config(std::ostream& out, const RandomForestParams& p) {
  out << "config max_depth " << p.max_depth << '\n'
      << "config n_trees " << p.n_trees << '\n'
      << "config feature_subsample " << p.feature_subsample << '\n'
      << "config bootstrap " << (p.bootstrap ? 1 : 0) << '\n';
}

void write_config(std::ostream& out, const GbtParams& p) {
  out << "config learning_rate " << num(p.learning_rate) << '\n'
      << "config max_depth " << p.max_depth << '\n'
      << "config n_rounds " << p.n_rounds << '\n'
      << "config l2_lambda " << num(p.l2_lambda) << '\n'
      << "config min_child_weight " << num(p.min_child_weight) << '\n';
}

void write_config(std::ostream& out, const MlpParams& p) {
  out << "config hidden";
  for (int h : p.hidden) out << ' ' << h;
  out << '\n'
      << "config l2_alpha " << num(p.l2_alpha) << '\n'
      << "config learning_rate " << num(p.learning_rate) << '\n'
      << "config batch_size " << p.batch_size << '\n'
      << "config max_epochs " << p.max_epochs << '\n'
      << "config tol " << num(p.tol) << '\n'
      << "config patience " << p.patience << '\n';
}

void write_config(std::ostream& out, const SvmParams& p) {
  out << "config c " << num(p.c) << '\n'
      << "config tol " << num(p.tol) << '\n'
      << "config max_epochs " << p.max_epochs << '\n'
      << "config seed " << p.seed << '\n';
}

void write_body(std::ostream& out, const DecisionTree& m) { write_tree(out, m.tree()); }

void write_body(std::ostream& out, const RandomForest& m) {
  out << "trees " << m.trees().size() << '\n';
  for (const auto& t : m.trees()) write_tree(out, t);
}

void write_body(std::ostream& out, const BoostedTrees& m) {
  out << "base_margin " << num(m.base_margin()) << '\n' << "trees " << m.trees().size() << '\n';
  for (const auto& t : m.trees()) write_tree(out, t);
}

void write_body(std::ostream& out, const Mlp& m) {
  const auto& theta = m.parameters();
  out << "layers " << theta.weights.size() << '\n';
  for (std::size_t l = 0; l < theta.weights.size(); ++l) {
    const auto& w = theta.weights[l];
    out << "layer " << w.rows() << ' ' << w.cols() << '\n';
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      out << 'w';
      for (Eigen::Index j = 0; j < w.cols(); ++j) out << ' ' << num(w(i, j));
      out << '\n';
    }
    out << 'b';
    for (Eigen::Index j = 0; j < theta.biases[l].size(); ++j) out << ' ' << num(theta.biases[l](j));
    out << '\n';
  }
}

void write_body(std::ostream& out, const LinearSvm& m) {
  out << "weights";
  for (Eigen::Index j = 0; j < m.weights().size(); ++j) out << ' ' << num(m.weights()(j));
  out << '\n' << "bias " << num(m.bias()) << '\n' << "sweeps " << m.sweeps() << '\n';
}

// --- reading ---------------------------------------------------------------

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  /// Next non-empty line split on spaces; the first token is the record tag.
  std::vector<std::string> next() {
    if (!pending_.empty()) return std::exchange(pending_, {});
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      std::vector<std::string> tokens;
      std::istringstream ss(line);
      std::string tok;
      while (ss >> tok) tokens.push_back(tok);
      if (!tokens.empty()) return tokens;
    }
    corrupt("unexpected end of file");
  }

  /// Makes `tokens` the result of the following next().
  void unread(std::vector<std::string> tokens) { pending_ = std::move(tokens); }

  std::vector<std::string> expect(const std::string& tag, std::size_t min_tokens) {
    auto tokens = next();
    if (tokens[0] != tag || tokens.size() < min_tokens) {
      corrupt("line " + std::to_string(line_no_) + ": expected '" + tag + "', got '" + tokens[0] + "'");
    }
    return tokens;
  }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
  std::vector<std::string> pending_;
};

using Config = std::map<std::string, std::vector<std::string>>;

const std::string& config_value(const Config& cfg, const std::string& key) {
  const auto it = cfg.find(key);
  if (it == cfg.end() || it->second.empty()) corrupt("missing config '" + key + "'");
  return it->second.front();
}

int cfg_int(const Config& cfg, const std::string& key) { return static_cast<int>(parse_int(config_value(cfg, key))); }
double cfg_double(const Config& cfg, const std::string& key) { return parse_double(config_value(cfg, key)); }

Tree read_tree(LineReader& in) {
  const auto header = in.expect("tree", 2);
  const auto count = parse_int(header[1]);
  if (count <= 0) corrupt("empty tree");
  Tree tree;
  for (long long k = 0; k < count; ++k) {
    const auto t = in.expect("node", 8);
    TreeNode n;
    n.feature = static_cast<int>(parse_int(t[1]));
    n.threshold = parse_double(t[2]);
    n.left = static_cast<int>(parse_int(t[3]));
    n.right = static_cast<int>(parse_int(t[4]));
    n.value = parse_double(t[5]);
    n.weight = parse_double(t[6]);
    n.gain = parse_double(t[7]);
    tree.nodes.push_back(n);
  }
  for (const auto& n : tree.nodes) {
    if (n.is_leaf()) continue;
    if (n.feature >= static_cast<int>(kFeatureCount) || n.left <= 0 || n.right <= 0 || n.left >= count ||
        n.right >= count) {
      corrupt("tree node references out of range");
    }
  }
  return tree;
}

std::vector<Tree> read_trees(LineReader& in) {
  const auto count = parse_int(in.expect("trees", 2)[1]);
  if (count < 0) corrupt("negative tree count");
  std::vector<Tree> trees;
  for (long long t = 0; t < count; ++t) trees.push_back(read_tree(in));
  return trees;
}

ModelImpl read_body(ModelKind kind, const Config& cfg, LineReader& in) {
  switch (kind) {
    case ModelKind::DecisionTree: {
      DecisionTreeParams p;
      p.max_depth = cfg_int(cfg, "max_depth");
      return DecisionTree(p, read_tree(in));
    }
    case ModelKind::RandomForest: {
      RandomForestParams p;
      p.max_depth = cfg_int(cfg, "max_depth");
      p.n_trees = cfg_int(cfg, "n_trees");
      p.feature_subsample = cfg_int(cfg, "feature_subsample");
      p.bootstrap = cfg_int(cfg, "bootstrap") != 0;
      return RandomForest(p, read_trees(in));
    }
    case ModelKind::Gbt: {
      GbtParams p;
      p.learning_rate = cfg_double(cfg, "learning_rate");
      p.max_depth = cfg_int(cfg, "max_depth");
      p.n_rounds = cfg_int(cfg, "n_rounds");
      p.l2_lambda = cfg_double(cfg, "l2_lambda");
      p.min_child_weight = cfg_double(cfg, "min_child_weight");
      const double base = parse_double(in.expect("base_margin", 2)[1]);
      return BoostedTrees(p, base, read_trees(in));
    }
    case ModelKind::Mlp: {
      MlpParams p;
      p.hidden.clear();
      const auto it = cfg.find("hidden");
      if (it == cfg.end() || it->second.empty()) corrupt("missing config 'hidden'");
      for (const auto& h : it->second) p.hidden.push_back(static_cast<int>(parse_int(h)));
      p.l2_alpha = cfg_double(cfg, "l2_alpha");
      p.learning_rate = cfg_double(cfg, "learning_rate");
      p.batch_size = cfg_int(cfg, "batch_size");
      p.max_epochs = cfg_int(cfg, "max_epochs");
      p.tol = cfg_double(cfg, "tol");
      p.patience = cfg_int(cfg, "patience");

      const auto layers = parse_int(in.expect("layers", 2)[1]);
      if (layers != static_cast<long long>(p.hidden.size()) + 1) corrupt("layer count does not match config");
      Mlp::Parameters theta;
      Eigen::Index expected_in = static_cast<Eigen::Index>(kFeatureCount);
      for (long long l = 0; l < layers; ++l) {
        const auto shape = in.expect("layer", 3);
        const auto rows = static_cast<Eigen::Index>(parse_int(shape[1]));
        const auto cols = static_cast<Eigen::Index>(parse_int(shape[2]));
        const Eigen::Index expected_out = l + 1 < layers ? p.hidden[static_cast<std::size_t>(l)] : 1;
        if (rows != expected_in || cols != expected_out) corrupt("layer shape does not match config");
        Eigen::MatrixXd w(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i) {
          const auto t = in.expect("w", static_cast<std::size_t>(cols) + 1);
          if (static_cast<Eigen::Index>(t.size()) != cols + 1) corrupt("weight row length");
          for (Eigen::Index j = 0; j < cols; ++j) w(i, j) = parse_double(t[static_cast<std::size_t>(j) + 1]);
        }
        const auto bt = in.expect("b", static_cast<std::size_t>(cols) + 1);
        if (static_cast<Eigen::Index>(bt.size()) != cols + 1) corrupt("bias length");
        Eigen::VectorXd b(cols);
        for (Eigen::Index j = 0; j < cols; ++j) b(j) = parse_double(bt[static_cast<std::size_t>(j) + 1]);
        theta.weights.push_back(std::move(w));
        theta.biases.push_back(std::move(b));
        expected_in = cols;
      }
      return Mlp(p, std::move(theta));
    }
    case ModelKind::LinearSvm: {
      SvmParams p;
      p.c = cfg_double(cfg, "c");
      p.tol = cfg_double(cfg, "tol");
      p.max_epochs = cfg_int(cfg, "max_epochs");
      p.seed = static_cast<std::uint64_t>(parse_int(config_value(cfg, "seed")));
      const auto wt = in.expect("weights", kFeatureCount + 1);
      if (wt.size() != kFeatureCount + 1) corrupt("weight vector length");
      Eigen::VectorXd w(static_cast<Eigen::Index>(kFeatureCount));
      for (std::size_t j = 0; j < kFeatureCount; ++j) w(static_cast<Eigen::Index>(j)) = parse_double(wt[j + 1]);
      const double bias = parse_double(in.expect("bias", 2)[1]);
      const int sweeps = static_cast<int>(parse_int(in.expect("sweeps", 2)[1]));
      return LinearSvm(p, std::move(w), bias, sweeps);
    }
  }
  corrupt("unknown kind");
}

}  // namespace

void save_model(const TrainedModel& model, std::ostream& out) {
  out << "urlsentry-model " << kModelFormatVersion << '\n'
      << "kind " << to_string(model.kind()) << '\n'
      << "schema_version " << model.schema_version << '\n'
      << "trained_at " << (model.trained_at.empty() ? "-" : model.trained_at) << '\n'
      << "features";
  for (auto name : kFeatureNames) out << ' ' << name;
  out << '\n';
  std::visit([&](const auto& m) { write_config(out, m.params()); }, model.impl);
  std::visit([&](const auto& m) { write_body(out, m); }, model.impl);
  out << "end\n";
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  save_model(model, out);
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

TrainedModel load_model(std::istream& in) {
  LineReader reader(in);
  const auto magic = reader.next();
  if (magic[0] != "urlsentry-model" || magic.size() != 2) corrupt("not a urlsentry model file");
  if (parse_int(magic[1]) != kModelFormatVersion) {
    throw Error(ErrorCode::VersionMismatch, "model format version " + magic[1] + " is not supported (expected " +
                                                std::to_string(kModelFormatVersion) + ")");
  }
  const auto kind_line = reader.expect("kind", 2);
  const auto kind = parse_model_kind(kind_line[1]);
  if (!kind || kind_line[1] != to_string(*kind)) corrupt("unknown model kind '" + kind_line[1] + "'");

  TrainedModel model;
  model.schema_version = reader.expect("schema_version", 2)[1];
  model.trained_at = reader.expect("trained_at", 2)[1];
  if (model.trained_at == "-") model.trained_at.clear();
  const auto features = reader.expect("features", 1);
  // Column names are informational; the schema version is what predict checks.
  (void)features;

  Config cfg;
  auto tokens = reader.next();
  while (tokens[0] == "config") {
    if (tokens.size() < 3) corrupt("config line without value");
    cfg[tokens[1]] = std::vector<std::string>(tokens.begin() + 2, tokens.end());
    tokens = reader.next();
  }
  reader.unread(std::move(tokens));
  model.impl = read_body(*kind, cfg, reader);
  reader.expect("end", 1);
  return model;
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open model " + path.string());
  return load_model(in);
}

}  // namespace urlsentry
