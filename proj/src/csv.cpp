#include "ntree/csv.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

namespace ntree {

std::string formatReal(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parseReal(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || !std::isfinite(v))
    throw std::runtime_error("csv: invalid real value '" + s + "'");
  return v;
}

long long parseInt(const std::string& s) {
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0')
    throw std::runtime_error("csv: invalid integer value '" + s + "'");
  return v;
}

std::vector<std::string> splitCsv(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cells;
}

namespace detail {

void writeLines(const std::filesystem::path& file,
                const std::vector<std::string>& lines) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  for (const auto& line : lines) out << line << '\n';
}

std::vector<std::string> readLines(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::vector<std::string> splitSpaces(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

}  // namespace detail

Dataset<Point2D> loadPointsCsv(const std::filesystem::path& file) {
  const auto lines = detail::readLines(file);
  if (lines.empty() || splitCsv(lines[0]) != std::vector<std::string>{"id", "x", "y"})
    throw std::runtime_error(file.string() + ": expected header id,x,y");
  Dataset<Point2D> data;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto cells = splitCsv(lines[i]);
    if (cells.size() != 3)
      throw std::runtime_error(file.string() + ": malformed row");
    data.add(parseInt(cells[0]),
             Point2D{parseReal(cells[1]), parseReal(cells[2])});
  }
  return data;
}

void writePointsCsv(const std::filesystem::path& file,
                    const Dataset<Point2D>& data) {
  std::vector<std::string> lines{"id,x,y"};
  for (std::size_t i = 0; i < data.size(); ++i)
    lines.push_back(std::to_string(data.ids[i]) + "," +
                    formatReal(data.objects[i].x) + "," +
                    formatReal(data.objects[i].y));
  detail::writeLines(file, lines);
}

Dataset<Trajectory> loadTrajectoriesCsv(const std::filesystem::path& file,
                                        bool spatialOnly) {
  const auto lines = detail::readLines(file);
  if (lines.empty() ||
      splitCsv(lines[0]) != std::vector<std::string>{"id", "t", "x", "y"})
    throw std::runtime_error(file.string() + ": expected header id,t,x,y");

  Dataset<Trajectory> data;
  std::vector<Instant> times;
  std::vector<Point2D> points;
  std::unordered_map<ObjectId, bool> seen;
  ObjectId currentId = 0;
  bool open = false;

  const auto flush = [&] {
    if (!open) return;
    if (!seen.emplace(currentId, true).second)
      throw std::runtime_error(file.string() + ": rows of id " +
                               std::to_string(currentId) +
                               " are not grouped together");
    if (points.size() < 2)
      throw std::runtime_error(file.string() + ": trajectory " +
                               std::to_string(currentId) +
                               " needs at least 2 samples");
    if (spatialOnly) {
      data.add(currentId, retimeConstantSpeed(points));
    } else {
      std::vector<Unit> units;
      units.reserve(points.size() - 1);
      for (std::size_t i = 0; i + 1 < points.size(); ++i)
        units.push_back(Unit{times[i], times[i + 1], points[i], points[i + 1]});
      data.add(currentId, Trajectory(std::move(units)));
    }
    times.clear();
    points.clear();
  };

  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto cells = splitCsv(lines[i]);
    if (cells.size() != 4)
      throw std::runtime_error(file.string() + ": malformed row");
    const ObjectId id = parseInt(cells[0]);
    const Instant t = parseReal(cells[1]);
    if (!open || id != currentId) {
      flush();
      currentId = id;
      open = true;
    } else if (!times.empty() && t <= times.back()) {
      throw std::runtime_error(file.string() + ": time stamps of id " +
                               std::to_string(id) +
                               " must be strictly increasing");
    }
    times.push_back(t);
    points.push_back(Point2D{parseReal(cells[2]), parseReal(cells[3])});
  }
  flush();
  return data;
}

void writeTrajectoriesCsv(const std::filesystem::path& file,
                          const Dataset<Trajectory>& data) {
  std::vector<std::string> lines{"id,t,x,y"};
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& units = data.objects[i].units();
    const std::string id = std::to_string(data.ids[i]);
    for (std::size_t u = 1; u < units.size(); ++u)
      if (units[u - 1].end != units[u].start ||
          !(units[u - 1].p1 == units[u].p0))
        throw std::runtime_error(
            "trajectory CSV stores sample sequences; id " + id +
            " is not continuous");
    lines.push_back(id + "," + formatReal(units.front().start) + "," +
                    formatReal(units.front().p0.x) + "," +
                    formatReal(units.front().p0.y));
    for (const Unit& u : units)
      lines.push_back(id + "," + formatReal(u.end) + "," +
                      formatReal(u.p1.x) + "," + formatReal(u.p1.y));
  }
  detail::writeLines(file, lines);
}

Dataset<WordSet> loadWordSetsCsv(const std::filesystem::path& file) {
  const auto lines = detail::readLines(file);
  if (lines.empty() ||
      splitCsv(lines[0]) != std::vector<std::string>{"id", "words"})
    throw std::runtime_error(file.string() + ": expected header id,words");
  Dataset<WordSet> data;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto cells = splitCsv(lines[i]);
    if (cells.size() != 2)
      throw std::runtime_error(file.string() + ": malformed row");
    data.add(parseInt(cells[0]), WordSet(detail::splitSpaces(cells[1])));
  }
  return data;
}

void writeWordSetsCsv(const std::filesystem::path& file,
                      const Dataset<WordSet>& data) {
  std::vector<std::string> lines{"id,words"};
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::string joined;
    for (const auto& w : data.objects[i].words) {
      if (!joined.empty()) joined += ' ';
      joined += w;
    }
    lines.push_back(std::to_string(data.ids[i]) + "," + joined);
  }
  detail::writeLines(file, lines);
}

Dataset<DenseVector> loadVectorsCsv(const std::filesystem::path& file) {
  const auto lines = detail::readLines(file);
  if (lines.empty() ||
      splitCsv(lines[0]) != std::vector<std::string>{"id", "values"})
    throw std::runtime_error(file.string() + ": expected header id,values");
  Dataset<DenseVector> data;
  std::size_t dim = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto cells = splitCsv(lines[i]);
    if (cells.size() != 2)
      throw std::runtime_error(file.string() + ": malformed row");
    DenseVector v;
    for (const auto& tok : detail::splitSpaces(cells[1]))
      v.values.push_back(parseReal(tok));
    if (data.size() == 0)
      dim = v.values.size();
    else if (v.values.size() != dim)
      throw std::runtime_error(file.string() +
                               ": vectors must share one length");
    data.add(parseInt(cells[0]), std::move(v));
  }
  return data;
}

void writeVectorsCsv(const std::filesystem::path& file,
                     const Dataset<DenseVector>& data) {
  std::vector<std::string> lines{"id,values"};
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::string joined;
    for (double v : data.objects[i].values) {
      if (!joined.empty()) joined += ' ';
      joined += formatReal(v);
    }
    lines.push_back(std::to_string(data.ids[i]) + "," + joined);
  }
  detail::writeLines(file, lines);
}

PayloadCodec<Point2D> pointCodec() {
  PayloadCodec<Point2D> codec;
  codec.schema = "points2d";
  codec.columns = {"X", "Y"};
  codec.writeCells = [](const Point2D& p, std::vector<std::string>& cells) {
    cells.push_back(formatReal(p.x));
    cells.push_back(formatReal(p.y));
  };
  codec.readCells = [](std::span<const std::string> cells, ObjectId) {
    return Point2D{parseReal(cells[0]), parseReal(cells[1])};
  };
  return codec;
}

PayloadCodec<DenseVector> vectorCodec() {
  PayloadCodec<DenseVector> codec;
  codec.schema = "vectors";
  codec.columns = {"Values"};
  codec.writeCells = [](const DenseVector& v, std::vector<std::string>& cells) {
    std::string joined;
    for (double x : v.values) {
      if (!joined.empty()) joined += ' ';
      joined += formatReal(x);
    }
    cells.push_back(std::move(joined));
  };
  codec.readCells = [](std::span<const std::string> cells, ObjectId) {
    DenseVector v;
    for (const auto& tok : detail::splitSpaces(cells[0]))
      v.values.push_back(parseReal(tok));
    return v;
  };
  return codec;
}

PayloadCodec<WordSet> wordSetCodec() {
  PayloadCodec<WordSet> codec;
  codec.schema = "wordsets";
  codec.columns = {"Words"};
  codec.writeCells = [](const WordSet& w, std::vector<std::string>& cells) {
    std::string joined;
    for (const auto& word : w.words) {
      if (!joined.empty()) joined += ' ';
      joined += word;
    }
    cells.push_back(std::move(joined));
  };
  codec.readCells = [](std::span<const std::string> cells, ObjectId) {
    return WordSet(detail::splitSpaces(cells[0]));
  };
  return codec;
}

PayloadCodec<Trajectory> trajectoryCodec() {
  auto byId = std::make_shared<std::unordered_map<ObjectId, Trajectory>>();
  PayloadCodec<Trajectory> codec;
  codec.schema = "trajectories";
  codec.columns = {};
  codec.writeCells = [](const Trajectory&, std::vector<std::string>&) {};
  codec.readCells = [byId](std::span<const std::string>, ObjectId tid) {
    const auto it = byId->find(tid);
    if (it == byId->end())
      throw std::runtime_error("trajectory sidecar: unknown TID " +
                               std::to_string(tid));
    return it->second;
  };
  codec.writeSidecar =
      [](const std::vector<std::pair<ObjectId, const Trajectory*>>& payloads,
         const std::filesystem::path& dir) {
        Dataset<Trajectory> data;
        for (const auto& [id, traj] : payloads) data.add(id, *traj);
        writeTrajectoriesCsv(dir / "trajectories.csv", data);
      };
  codec.prepareRead = [byId](const std::filesystem::path& dir) {
    byId->clear();
    const auto data = loadTrajectoriesCsv(dir / "trajectories.csv");
    for (std::size_t i = 0; i < data.size(); ++i)
      byId->emplace(data.ids[i], data.objects[i]);
  };
  return codec;
}

}  // namespace ntree
