#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "stable_opinf/inference.h"
#include "stable_opinf/pod.h"
#include "stable_opinf/rom.h"

namespace stable_opinf {

using Json = nlohmann::json;

/// Shortest round-trip decimal text, independent of the global locale.
std::string format_double(double value);
/// Throws kParse on anything but a complete decimal number (or inf / nan).
double parse_double(const std::string& text);

/// Writes a CSV with a header line and one row per column of `data`,
/// prefixed with the matching entry of `times`.
void write_series_csv(const std::string& path,
                      const std::vector<std::string>& header,
                      const Eigen::VectorXd& times,
                      const Eigen::MatrixXd& data);

struct CsvTable {
  std::vector<std::string> header;
  Eigen::VectorXd times;
  Eigen::MatrixXd data;  // columns are rows of the file, first column dropped
};

CsvTable read_series_csv(const std::string& path);

/// Displacements as t, y_1..y_n and inputs as t, u_1..u_nu.
void write_snapshots(const std::string& displacement_path,
                     const std::string& input_path,
                     const SnapshotSet& snapshots);
/// Throws kDimensionMismatch when the two files disagree on time stamps.
SnapshotSet read_snapshots(const std::string& displacement_path,
                           const std::string& input_path);

/// Header t, x_1..x_r, v_1..v_r.
void write_trajectory(const std::string& path, const Trajectory& trajectory);

/// Model file; `provenance` is stored verbatim next to the data digest.
Json model_to_json(const RomModel& model, const Json& provenance = Json::object());
RomModel model_from_json(const Json& doc);

void save_model(const std::string& path, const RomModel& model,
                const Json& provenance = Json::object());
RomModel load_model(const std::string& path);

Json read_json(const std::string& path);
void write_json(const std::string& path, const Json& doc);
void write_text(const std::string& path, const std::string& text);

Json matrix_to_json(const Eigen::MatrixXd& A);
Eigen::MatrixXd matrix_from_json(const Json& rows, int cols = -1);

}  // namespace stable_opinf
