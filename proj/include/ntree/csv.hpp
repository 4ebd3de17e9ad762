#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ntree/dataset.hpp"
#include "ntree/metrics.hpp"
#include "ntree/persistence.hpp"
#include "ntree/point.hpp"
#include "ntree/trajectory.hpp"

namespace ntree {

/// Round-trip exact rendering for doubles (17 significant digits).
std::string formatReal(double v);
double parseReal(const std::string& s);
long long parseInt(const std::string& s);
std::vector<std::string> splitCsv(const std::string& line);

// Dataset files. All CSV is UTF-8 with LF newlines, a mandatory header
// row, '.' as the decimal separator and no quoting (fields must not
// contain commas).

Dataset<Point2D> loadPointsCsv(const std::filesystem::path& file);
void writePointsCsv(const std::filesystem::path& file,
                    const Dataset<Point2D>& data);

/// Header `id,t,x,y`; rows grouped by id with strictly increasing t, and
/// consecutive samples become units. With spatialOnly the time stamps are
/// replaced so each trajectory moves at constant speed.
Dataset<Trajectory> loadTrajectoriesCsv(const std::filesystem::path& file,
                                        bool spatialOnly = false);
void writeTrajectoriesCsv(const std::filesystem::path& file,
                          const Dataset<Trajectory>& data);

Dataset<WordSet> loadWordSetsCsv(const std::filesystem::path& file);
void writeWordSetsCsv(const std::filesystem::path& file,
                      const Dataset<WordSet>& data);

Dataset<DenseVector> loadVectorsCsv(const std::filesystem::path& file);
void writeVectorsCsv(const std::filesystem::path& file,
                     const Dataset<DenseVector>& data);

/// Serialization of node payload cells for the relational node table.
/// Trajectory payloads live in a sidecar file and are referenced by TID,
/// so their codec contributes no payload columns.
template <class Obj>
struct PayloadCodec {
  std::string schema;
  std::vector<std::string> columns;
  std::function<void(const Obj&, std::vector<std::string>&)> writeCells;
  std::function<Obj(std::span<const std::string>, ObjectId)> readCells;
  std::function<void(const std::vector<std::pair<ObjectId, const Obj*>>&,
                     const std::filesystem::path&)>
      writeSidecar;
  std::function<void(const std::filesystem::path&)> prepareRead;
};

PayloadCodec<Point2D> pointCodec();
PayloadCodec<DenseVector> vectorCodec();
PayloadCodec<WordSet> wordSetCodec();
PayloadCodec<Trajectory> trajectoryCodec();

namespace detail {

void writeLines(const std::filesystem::path& file,
                const std::vector<std::string>& lines);
std::vector<std::string> readLines(const std::filesystem::path& file);

}  // namespace detail

/// Writes nodes.csv, distances.csv, pivots.csv and treeinfo.csv (plus the
/// codec's sidecar, if any) into the directory.
template <class Obj>
void writeTreeImageCsv(const RelationalTreeImage<Obj>& img,
                       const std::filesystem::path& dir,
                       const PayloadCodec<Obj>& codec) {
  std::filesystem::create_directories(dir);

  std::vector<std::string> lines;
  {
    std::string header;
    for (const auto& c : codec.columns) header += c + ",";
    header += "TID,NodeId,Entry,Subtree,MaxDist";
    lines.push_back(header);
    std::vector<std::string> cells;
    for (const auto& row : img.nodes) {
      cells.clear();
      codec.writeCells(row.payload, cells);
      std::string line;
      for (const auto& c : cells) line += c + ",";
      line += std::to_string(row.objectRef) + "," + std::to_string(row.nodeId) +
              "," + std::to_string(row.entry) + "," +
              std::to_string(row.subtree) + "," + formatReal(row.maxDist);
      lines.push_back(std::move(line));
    }
    detail::writeLines(dir / "nodes.csv", lines);
  }
  {
    lines.assign({"NodeId,Entry1,Entry2,Distance"});
    for (const auto& row : img.distances)
      lines.push_back(std::to_string(row.nodeId) + "," +
                      std::to_string(row.entry1) + "," +
                      std::to_string(row.entry2) + "," +
                      formatReal(row.distance));
    detail::writeLines(dir / "distances.csv", lines);
  }
  {
    lines.assign({"NodeId,Entry,PosX,PosY,IsPivot"});
    for (const auto& row : img.pivots)
      lines.push_back(std::to_string(row.nodeId) + "," +
                      std::to_string(row.entry) + "," + formatReal(row.posX) +
                      "," + formatReal(row.posY) + "," +
                      (row.isPivot ? "1" : "0"));
    detail::writeLines(dir / "pivots.csv", lines);
  }
  {
    lines.assign({"K,L,Metric,PayloadSchema,RootNodeId"});
    lines.push_back(std::to_string(img.info.k) + "," +
                    std::to_string(img.info.l) + "," + img.info.metricName +
                    "," + img.info.payloadSchema + "," +
                    std::to_string(img.info.rootNodeId));
    detail::writeLines(dir / "treeinfo.csv", lines);
  }

  if (codec.writeSidecar) {
    std::vector<std::pair<ObjectId, const Obj*>> unique;
    std::unordered_map<ObjectId, bool> seen;
    for (const auto& row : img.nodes)
      if (seen.emplace(row.objectRef, true).second)
        unique.emplace_back(row.objectRef, &row.payload);
    codec.writeSidecar(unique, dir);
  }
}

template <class Obj>
RelationalTreeImage<Obj> readTreeImageCsv(const std::filesystem::path& dir,
                                          const PayloadCodec<Obj>& codec) {
  if (codec.prepareRead) codec.prepareRead(dir);
  RelationalTreeImage<Obj> img;

  {
    const auto lines = detail::readLines(dir / "treeinfo.csv");
    if (lines.size() < 2)
      throw std::runtime_error("treeinfo.csv: missing TreeInfo row");
    const auto cells = splitCsv(lines[1]);
    if (cells.size() != 5) throw std::runtime_error("treeinfo.csv: malformed");
    img.info.k = static_cast<int>(parseInt(cells[0]));
    img.info.l = static_cast<int>(parseInt(cells[1]));
    img.info.metricName = cells[2];
    img.info.payloadSchema = cells[3];
    img.info.rootNodeId = static_cast<int>(parseInt(cells[4]));
  }
  {
    const auto lines = detail::readLines(dir / "nodes.csv");
    const std::size_t payloadCols = codec.columns.size();
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const auto cells = splitCsv(lines[i]);
      if (cells.size() != payloadCols + 5)
        throw std::runtime_error("nodes.csv: malformed row");
      NodesRow<Obj> row;
      row.objectRef = parseInt(cells[payloadCols]);
      row.nodeId = static_cast<int>(parseInt(cells[payloadCols + 1]));
      row.entry = static_cast<int>(parseInt(cells[payloadCols + 2]));
      row.subtree = static_cast<int>(parseInt(cells[payloadCols + 3]));
      row.maxDist = parseReal(cells[payloadCols + 4]);
      row.payload = codec.readCells(
          std::span<const std::string>(cells.data(), payloadCols),
          row.objectRef);
      img.nodes.push_back(std::move(row));
    }
  }
  {
    const auto lines = detail::readLines(dir / "distances.csv");
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const auto cells = splitCsv(lines[i]);
      if (cells.size() != 4)
        throw std::runtime_error("distances.csv: malformed row");
      img.distances.push_back(
          DistancesRow{static_cast<int>(parseInt(cells[0])),
                       static_cast<int>(parseInt(cells[1])),
                       static_cast<int>(parseInt(cells[2])),
                       parseReal(cells[3])});
    }
  }
  {
    const auto lines = detail::readLines(dir / "pivots.csv");
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const auto cells = splitCsv(lines[i]);
      if (cells.size() != 5)
        throw std::runtime_error("pivots.csv: malformed row");
      img.pivots.push_back(PivotsRow{
          static_cast<int>(parseInt(cells[0])),
          static_cast<int>(parseInt(cells[1])), parseReal(cells[2]),
          parseReal(cells[3]), parseInt(cells[4]) != 0});
    }
  }
  return img;
}

}  // namespace ntree
