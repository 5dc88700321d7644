#include "stable_opinf/io.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "stable_opinf/error.h"

namespace stable_opinf {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(field);
      field.clear();
    } else if (ch != '\r') {
      field.push_back(ch);
    }
  }
  out.push_back(field);
  return out;
}

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::ofstream OpenOut(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  return out;
}

std::vector<std::string> NumberedHeader(const std::string& prefix, int count) {
  std::vector<std::string> h;
  for (int i = 1; i <= count; ++i) h.push_back(prefix + std::to_string(i));
  return h;
}

Json LowerTriangle(const MatrixXd& G) {
  Json out = Json::array();
  for (int i = 0; i < G.rows(); ++i) {
    for (int j = 0; j <= i; ++j) out.push_back(G(i, j));
  }
  return out;
}

MatrixXd FromLowerTriangle(const Json& values, int n) {
  if (!values.is_array() ||
      values.size() != static_cast<std::size_t>(n * (n + 1) / 2)) {
    throw Error(ErrorCode::kParse, "Gram block has the wrong number of entries");
  }
  MatrixXd G(n, n);
  std::size_t pos = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      G(i, j) = G(j, i) = values[pos++].get<double>();
    }
  }
  return G;
}

Json VectorToJson(const VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

VectorXd VectorFromJson(const Json& a) {
  if (!a.is_array()) throw Error(ErrorCode::kParse, "expected a number array");
  VectorXd v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[i] = a[i].get<double>();
  return v;
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& raw) {
  const std::string text = Trim(raw);
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (!text.empty() && *begin == '+') ++begin;
  const auto res = std::from_chars(begin, end, value);
  if (text.empty() || res.ec != std::errc() || res.ptr != end) {
    throw Error(ErrorCode::kParse, "not a number: '" + raw + "'");
  }
  return value;
}

void write_series_csv(const std::string& path,
                      const std::vector<std::string>& header,
                      const VectorXd& times, const MatrixXd& data) {
  if (data.cols() != times.size() ||
      header.size() != static_cast<std::size_t>(data.rows() + 1)) {
    throw Error(ErrorCode::kDimensionMismatch, "CSV header or column count mismatch");
  }
  std::ofstream out = OpenOut(path);
  for (std::size_t i = 0; i < header.size(); ++i) {
    out << (i ? "," : "") << header[i];
  }
  out << '\n';
  for (Eigen::Index c = 0; c < data.cols(); ++c) {
    out << format_double(times[c]);
    for (Eigen::Index r = 0; r < data.rows(); ++r) {
      out << ',' << format_double(data(r, c));
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path);
}

CsvTable read_series_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::kParse, path + " is empty");
  }
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  table.header = SplitCsvLine(line);
  for (auto& h : table.header) h = Trim(h);
  const std::size_t width = table.header.size();
  if (width < 1) throw Error(ErrorCode::kParse, path + " has no columns");
  std::vector<std::vector<double>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    const auto fields = SplitCsvLine(line);
    if (fields.size() != width) {
      throw Error(ErrorCode::kParse, path + ":" + std::to_string(line_no) +
                                         ": expected " + std::to_string(width) +
                                         " fields");
    }
    std::vector<double> row(width);
    for (std::size_t i = 0; i < width; ++i) row[i] = parse_double(fields[i]);
    rows.push_back(std::move(row));
  }
  const int n = static_cast<int>(rows.size());
  table.times.resize(n);
  table.data.resize(static_cast<Eigen::Index>(width) - 1, n);
  for (int c = 0; c < n; ++c) {
    table.times[c] = rows[c][0];
    for (std::size_t r = 1; r < width; ++r) table.data(r - 1, c) = rows[c][r];
  }
  return table;
}

void write_snapshots(const std::string& displacement_path,
                     const std::string& input_path,
                     const SnapshotSet& snapshots) {
  auto h = NumberedHeader("y_", snapshots.num_dofs());
  h.insert(h.begin(), "t");
  write_series_csv(displacement_path, h, snapshots.times, snapshots.displacements);
  auto hu = NumberedHeader("u_", snapshots.num_inputs());
  hu.insert(hu.begin(), "t");
  write_series_csv(input_path, hu, snapshots.times, snapshots.inputs);
}

SnapshotSet read_snapshots(const std::string& displacement_path,
                           const std::string& input_path) {
  CsvTable y = read_series_csv(displacement_path);
  CsvTable u = read_series_csv(input_path);
  if (y.times.size() != u.times.size() ||
      (y.times - u.times).cwiseAbs().maxCoeff() >
          1e-12 * (1.0 + y.times.cwiseAbs().maxCoeff())) {
    throw Error(ErrorCode::kDimensionMismatch,
                "displacement and input files have different time stamps");
  }
  SnapshotSet s;
  s.times = std::move(y.times);
  s.displacements = std::move(y.data);
  s.inputs = std::move(u.data);
  return s;
}

void write_trajectory(const std::string& path, const Trajectory& trajectory) {
  const int r = static_cast<int>(trajectory.X.rows());
  auto h = NumberedHeader("x_", r);
  auto hv = NumberedHeader("v_", r);
  h.insert(h.begin(), "t");
  h.insert(h.end(), hv.begin(), hv.end());
  MatrixXd data(2 * r, trajectory.size());
  data.topRows(r) = trajectory.X;
  data.bottomRows(r) = trajectory.Xdot;
  write_series_csv(path, h, trajectory.times, data);
}

Json matrix_to_json(const MatrixXd& A) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < A.cols(); ++j) row.push_back(A(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

MatrixXd matrix_from_json(const Json& rows, int cols) {
  if (!rows.is_array()) throw Error(ErrorCode::kParse, "expected a matrix");
  const int m = static_cast<int>(rows.size());
  int n = cols;
  if (m > 0) {
    if (!rows[0].is_array()) throw Error(ErrorCode::kParse, "expected matrix rows");
    n = static_cast<int>(rows[0].size());
  }
  if (n < 0) n = 0;
  MatrixXd A(m, n);
  for (int i = 0; i < m; ++i) {
    if (!rows[i].is_array() || static_cast<int>(rows[i].size()) != n) {
      throw Error(ErrorCode::kParse, "ragged matrix");
    }
    for (int j = 0; j < n; ++j) A(i, j) = rows[i][j].get<double>();
  }
  return A;
}

Json model_to_json(const RomModel& model, const Json& provenance) {
  const ClusterSelection& sel = model.selection;
  Json doc;
  doc["format"] = "stable_opinf.model/1";
  doc["r"] = model.r;
  doc["n_u"] = model.n_u;
  doc["mode"] = std::string(to_string(model.mode));
  doc["hyperparams"] = {{"eps", model.eps},
                        {"delta_m", model.delta_m},
                        {"delta_c", model.delta_c}};
  doc["M"] = matrix_to_json(model.M);
  doc["C"] = matrix_to_json(model.C);
  doc["B"] = matrix_to_json(model.B);
  doc["degree"] = sel.degree;
  doc["cluster_size"] = sel.cluster_size;
  doc["stage1_clusters"] = sel.stage1_clusters;
  Json phi = Json::array();
  for (const auto& m : sel.phi) {
    std::string line;
    for (int j = 0; j < m.num_vars(); ++j) {
      line += (j ? " " : "") + std::to_string(m[j]);
    }
    phi.push_back(line);
  }
  doc["phi"] = std::move(phi);
  doc["k"] = VectorToJson(model.k);
  Json clusters = Json::array();
  for (const auto& c : sel.clusters) clusters.push_back(c.vars);
  doc["clusters"] = std::move(clusters);
  Json grams = Json::object();
  Json g = Json::array(), h = Json::array();
  for (const auto& G : model.certificate.G) g.push_back(LowerTriangle(G));
  for (const auto& H : model.certificate.H) h.push_back(LowerTriangle(H));
  grams["G"] = std::move(g);
  grams["H"] = std::move(h);
  doc["grams"] = std::move(grams);
  doc["V"] = matrix_to_json(model.V);
  doc["sigma"] = VectorToJson(model.sigma);
  doc["mean"] = VectorToJson(model.mean);
  Json prov = provenance.is_object() ? provenance : Json::object();
  prov["data_hash"] = model.data_hash;
  doc["provenance"] = std::move(prov);
  return doc;
}

RomModel model_from_json(const Json& doc) {
  try {
    RomModel model;
    model.r = doc.at("r").get<int>();
    model.n_u = doc.at("n_u").get<int>();
    model.mode = parse_mode(doc.at("mode").get<std::string>());
    const Json& hp = doc.at("hyperparams");
    model.eps = hp.at("eps").get<double>();
    model.delta_m = hp.at("delta_m").get<double>();
    model.delta_c = hp.at("delta_c").get<double>();
    model.M = matrix_from_json(doc.at("M"), model.r);
    model.C = matrix_from_json(doc.at("C"), model.r);
    model.B = matrix_from_json(doc.at("B"), model.n_u);
    if (model.M.rows() != model.r || model.M.cols() != model.r ||
        model.C.rows() != model.r || model.C.cols() != model.r ||
        model.B.rows() != model.r || model.B.cols() != model.n_u) {
      throw Error(ErrorCode::kDimensionMismatch, "operator shapes disagree with r, n_u");
    }
    const int degree = doc.at("degree").get<int>();
    const int cluster_size = doc.at("cluster_size").get<int>();
    std::vector<Cluster> clusters;
    for (const auto& c : doc.at("clusters")) {
      clusters.push_back(Cluster{c.get<std::vector<int>>()});
    }
    if (cluster_size == model.r) {
      model.selection = dense_selection(model.r, degree);
    } else {
      model.selection = make_selection(model.r, degree, clusters);
    }
    model.selection.stage1_clusters = doc.value("stage1_clusters", 0);
    std::string phi_text;
    for (const auto& line : doc.at("phi")) phi_text += line.get<std::string>() + "\n";
    const MonomialBasis phi = MonomialBasis::Parse(model.r, phi_text);
    if (!(phi == model.selection.phi)) {
      throw Error(ErrorCode::kParse, "stored phi does not match the cluster list");
    }
    model.k = VectorFromJson(doc.at("k"));
    if (model.k.size() != phi.size()) {
      throw Error(ErrorCode::kDimensionMismatch, "k length differs from |phi|");
    }
    const Json& grams = doc.at("grams");
    const auto& psi = model.selection.psi_bases;
    for (const char* key : {"G", "H"}) {
      const Json& list = grams.at(key);
      if (list.empty()) continue;
      if (list.size() != psi.size()) {
        throw Error(ErrorCode::kDimensionMismatch, "one Gram block per cluster expected");
      }
      auto& dst = key[0] == 'G' ? model.certificate.G : model.certificate.H;
      for (std::size_t i = 0; i < list.size(); ++i) {
        dst.push_back(FromLowerTriangle(list[i], psi[i].size()));
      }
    }
    model.V = matrix_from_json(doc.at("V"), model.r);
    model.sigma = VectorFromJson(doc.at("sigma"));
    model.mean = VectorFromJson(doc.value("mean", Json::array()));
    model.data_hash = doc.at("provenance").value("data_hash", std::string());
    return model;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("model file: ") + e.what());
  }
}

Json read_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParse, path + ": " + e.what());
  }
}

void write_json(const std::string& path, const Json& doc) {
  write_text(path, doc.dump(2) + "\n");
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out = OpenOut(path);
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path);
}

void save_model(const std::string& path, const RomModel& model,
                const Json& provenance) {
  write_json(path, model_to_json(model, provenance));
}

RomModel load_model(const std::string& path) {
  return model_from_json(read_json(path));
}

}  // namespace stable_opinf
