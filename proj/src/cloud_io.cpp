#include "gpslam/cloud_io.hpp"

#include "gpslam/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace gpslam {

namespace {

bool has_extension(const std::string& path, const std::string& ext) {
  if (path.size() < ext.size()) return false;
  std::string tail = path.substr(path.size() - ext.size());
  std::transform(tail.begin(), tail.end(), tail.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return tail == ext;
}

std::vector<std::string> split_words(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

void keep_if_finite(PointCloud& out, const Point3& p, CloudLoadReport& report) {
  if (p.allFinite())
    out.push_back(p);
  else
    ++report.rejected;
}

PointCloud load_xyz(std::istream& in, const std::string& path, CloudLoadReport& report) {
  PointCloud out;
  std::string line;
  std::size_t line_no = 0;
  bool warned_extra = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto words = split_words(line);
    if (words.empty()) continue;
    if (words.size() < 3) throw ParseError(path, line_no, "expected at least 3 columns");
    Point3 p;
    for (int i = 0; i < 3; ++i) {
      const std::string& w = words[static_cast<std::size_t>(i)];
      char* end = nullptr;
      p[i] = std::strtod(w.c_str(), &end);
      if (end == w.c_str() || *end != '\0') throw ParseError(path, line_no, "bad number '" + w + "'");
    }
    if (words.size() > 3 && !warned_extra) {
      report.warnings.push_back(path + ": columns beyond x y z are ignored");
      warned_extra = true;
    }
    keep_if_finite(out, p, report);
  }
  return out;
}

struct PcdField {
  std::string name;
  int size = 4;
  char type = 'F';
  int count = 1;
};

double read_scalar(const char* data, const PcdField& f) {
  switch (f.type) {
    case 'F':
      if (f.size == 4) {
        float v;
        std::memcpy(&v, data, 4);
        return v;
      } else {
        double v;
        std::memcpy(&v, data, 8);
        return v;
      }
    case 'I': {
      std::int64_t v = 0;
      if (f.size == 1) { std::int8_t t; std::memcpy(&t, data, 1); v = t; }
      else if (f.size == 2) { std::int16_t t; std::memcpy(&t, data, 2); v = t; }
      else if (f.size == 4) { std::int32_t t; std::memcpy(&t, data, 4); v = t; }
      else { std::memcpy(&v, data, 8); }
      return static_cast<double>(v);
    }
    default: {
      std::uint64_t v = 0;
      if (f.size == 1) { std::uint8_t t; std::memcpy(&t, data, 1); v = t; }
      else if (f.size == 2) { std::uint16_t t; std::memcpy(&t, data, 2); v = t; }
      else if (f.size == 4) { std::uint32_t t; std::memcpy(&t, data, 4); v = t; }
      else { std::memcpy(&v, data, 8); }
      return static_cast<double>(v);
    }
  }
}

PointCloud load_pcd(std::istream& in, const std::string& path, CloudLoadReport& report) {
  std::vector<PcdField> fields;
  std::size_t points = 0;
  bool have_points = false;
  std::string data_kind;
  std::string line;
  std::size_t line_no = 0;

  while (data_kind.empty() && std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto words = split_words(line);
    if (words.empty() || words[0][0] == '#') continue;
    const std::string& key = words[0];
    const std::size_t n = words.size() - 1;
    try {
      if (key == "FIELDS") {
        fields.resize(n);
        for (std::size_t i = 0; i < n; ++i) fields[i].name = words[i + 1];
      } else if (key == "SIZE" || key == "TYPE" || key == "COUNT") {
        if (n != fields.size()) throw ParseError(path, line_no, key + " does not match FIELDS");
        for (std::size_t i = 0; i < n; ++i) {
          if (key == "SIZE") fields[i].size = std::stoi(words[i + 1]);
          if (key == "TYPE") fields[i].type = words[i + 1].at(0);
          if (key == "COUNT") fields[i].count = std::stoi(words[i + 1]);
        }
      } else if (key == "POINTS") {
        points = std::stoul(words.at(1));
        have_points = true;
      } else if (key == "WIDTH" && !have_points) {
        points = std::stoul(words.at(1));
      } else if (key == "DATA") {
        data_kind = words.at(1);
      }
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception&) {
      throw ParseError(path, line_no, "malformed header line '" + line + "'");
    }
  }
  if (data_kind.empty()) throw ParseError(path, line_no, "missing DATA line");

  std::array<int, 3> xyz = {-1, -1, -1};
  std::vector<std::size_t> offsets;   // byte offset per field (binary)
  std::vector<std::size_t> columns;   // first column per field (ascii)
  std::size_t record = 0;
  std::size_t column = 0;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const auto& f = fields[i];
    if (f.size != 1 && f.size != 2 && f.size != 4 && f.size != 8)
      throw ParseError(path, line_no, "unsupported field size for '" + f.name + "'");
    if (f.name == "x") xyz[0] = static_cast<int>(i);
    else if (f.name == "y") xyz[1] = static_cast<int>(i);
    else if (f.name == "z") xyz[2] = static_cast<int>(i);
    else report.warnings.push_back(path + ": field '" + f.name + "' ignored");
    offsets.push_back(record);
    columns.push_back(column);
    record += static_cast<std::size_t>(f.size * f.count);
    column += static_cast<std::size_t>(f.count);
  }
  if (std::find(xyz.begin(), xyz.end(), -1) != xyz.end())
    throw ParseError(path, line_no, "PCD file lacks x, y and z fields");

  PointCloud out;
  if (data_kind == "ascii") {
    std::size_t read = 0;
    while (read < points && std::getline(in, line)) {
      ++line_no;
      const auto words = split_words(line);
      if (words.empty()) continue;
      if (words.size() < column) throw ParseError(path, line_no, "record has too few values");
      Point3 p;
      for (int a = 0; a < 3; ++a) {
        const std::string& w = words[columns[static_cast<std::size_t>(xyz[a])]];
        if (w == "nan" || w == "NaN" || w == "-nan") {
          p[a] = std::nan("");
          continue;
        }
        char* end = nullptr;
        p[a] = std::strtod(w.c_str(), &end);
        if (end == w.c_str()) throw ParseError(path, line_no, "bad number '" + w + "'");
      }
      keep_if_finite(out, p, report);
      ++read;
    }
    if (read < points) throw ParseError(path, line_no, "fewer records than POINTS");
  } else if (data_kind == "binary") {
    std::vector<char> buffer(record);
    for (std::size_t k = 0; k < points; ++k) {
      if (!in.read(buffer.data(), static_cast<std::streamsize>(record)))
        throw ParseError(path, line_no, "binary data truncated at record " + std::to_string(k));
      Point3 p;
      for (int a = 0; a < 3; ++a) {
        const auto fi = static_cast<std::size_t>(xyz[a]);
        p[a] = read_scalar(buffer.data() + offsets[fi], fields[fi]);
      }
      keep_if_finite(out, p, report);
    }
  } else {
    throw ParseError(path, line_no, "unsupported DATA encoding '" + data_kind + "'");
  }
  return out;
}

}  // namespace

PointCloud load_cloud(const std::string& path, CloudLoadReport* report) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  CloudLoadReport local;
  CloudLoadReport& rep = report ? *report : local;
  PointCloud out = has_extension(path, ".pcd") ? load_pcd(in, path, rep) : load_xyz(in, path, rep);
  if (out.empty()) rep.warnings.push_back(path + ": no points");
  if (rep.rejected > 0)
    rep.warnings.push_back(path + ": rejected " + std::to_string(rep.rejected) +
                           " records with non-finite coordinates");
  return out;
}

void save_cloud(const PointCloud& cloud, const std::string& path, PcdEncoding pcd_encoding) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path + " for writing");
  if (!has_extension(path, ".pcd")) {
    out << std::setprecision(10);
    for (const auto& p : cloud) out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
    return;
  }
  const bool binary = pcd_encoding == PcdEncoding::Binary;
  out << "# .PCD v0.7 - Point Cloud Data file format\n"
      << "VERSION 0.7\nFIELDS x y z\nSIZE 8 8 8\nTYPE F F F\nCOUNT 1 1 1\n"
      << "WIDTH " << cloud.size() << "\nHEIGHT 1\nVIEWPOINT 0 0 0 1 0 0 0\n"
      << "POINTS " << cloud.size() << "\nDATA " << (binary ? "binary" : "ascii") << "\n";
  if (binary) {
    for (const auto& p : cloud) out.write(reinterpret_cast<const char*>(p.data()), 3 * sizeof(double));
  } else {
    out << std::setprecision(17);
    for (const auto& p : cloud) out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  }
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path);
}

std::vector<TimedPose> load_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::vector<TimedPose> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    double v[8];
    int n = 0;
    while (n < 8 && fields >> v[n]) ++n;
    if (n == 0 && fields.eof()) continue;
    if (n != 8) throw ParseError(path, line_no, "expected 'timestamp tx ty tz qx qy qz qw'");
    const Eigen::Quaterniond q(v[7], v[4], v[5], v[6]);
    if (!(q.norm() > 0.0)) throw ParseError(path, line_no, "zero quaternion");
    out.push_back({v[0], Pose(q, {v[1], v[2], v[3]})});
  }
  return out;
}

void save_trajectory(const std::vector<TimedPose>& trajectory, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path + " for writing");
  out << std::setprecision(12);
  for (const auto& tp : trajectory) {
    const auto& t = tp.pose.translation();
    const auto& q = tp.pose.rotation();
    out << tp.timestamp << ' ' << t.x() << ' ' << t.y() << ' ' << t.z() << ' ' << q.x() << ' '
        << q.y() << ' ' << q.z() << ' ' << q.w() << '\n';
  }
}

}  // namespace gpslam
