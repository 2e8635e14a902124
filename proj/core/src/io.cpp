#include "llloc/io.hpp"

#include "llloc/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <bit>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace llloc {

namespace fs = std::filesystem;

namespace {

static_assert(std::endian::native == std::endian::little, "binary PLY assumes little endian");

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const fs::path& path, bool binary = false) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  return in;
}

[[noreturn]] void bad(const fs::path& path, const std::string& what) {
  throw Error(ErrorCode::Io, path.string() + ": " + what);
}

}  // namespace

void write_ply(const fs::path& path, const Scan& cloud, PlyEncoding encoding) {
  const bool binary = encoding == PlyEncoding::BinaryFloat32;
  auto out = open_out(path, binary);
  out << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n"
      << "comment timestamp " << fmt(cloud.timestamp) << "\n"
      << "element vertex " << cloud.points.size() << "\n";
  const char* type = binary ? "float" : "double";
  out << "property " << type << " x\nproperty " << type << " y\nproperty " << type << " z\n"
      << "end_header\n";
  if (binary) {
    std::vector<float> buf;
    buf.reserve(cloud.points.size() * 3);
    for (const auto& p : cloud.points) {
      buf.push_back(static_cast<float>(p.x()));
      buf.push_back(static_cast<float>(p.y()));
      buf.push_back(static_cast<float>(p.z()));
    }
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
  } else {
    std::string line;
    for (const auto& p : cloud.points) {
      line = fmt(p.x());
      line += ' ';
      line += fmt(p.y());
      line += ' ';
      line += fmt(p.z());
      line += '\n';
      out << line;
    }
  }
  if (!out) bad(path, "write failed");
}

Scan read_ply(const fs::path& path, Frame frame) {
  auto in = open_in(path, true);
  Scan scan;
  scan.frame = frame;
  std::string line;
  std::getline(in, line);
  if (line != "ply") bad(path, "not a PLY file");

  bool binary = false;
  std::size_t count = 0;
  std::vector<std::string> props;
  bool in_vertex = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "format") {
      std::string f;
      ls >> f;
      if (f == "binary_little_endian") binary = true;
      else if (f != "ascii") bad(path, "unsupported format " + f);
    } else if (key == "comment") {
      std::string tag;
      ls >> tag;
      if (tag == "timestamp") ls >> scan.timestamp;
    } else if (key == "element") {
      std::string name;
      ls >> name;
      in_vertex = name == "vertex";
      if (in_vertex) ls >> count;
    } else if (key == "property" && in_vertex) {
      std::string type, name;
      ls >> type >> name;
      props.push_back(type + " " + name);
    } else if (key == "end_header") {
      break;
    }
  }
  const std::vector<std::string> want_d = {"double x", "double y", "double z"};
  const std::vector<std::string> want_f = {"float x", "float y", "float z"};
  const bool is_double = props == want_d;
  if (!is_double && props != want_f) bad(path, "expected x y z float or double properties");

  scan.points.resize(count);
  if (binary) {
    for (auto& p : scan.points) {
      if (is_double) {
        double v[3];
        in.read(reinterpret_cast<char*>(v), sizeof v);
        p = Point3(v[0], v[1], v[2]);
      } else {
        float v[3];
        in.read(reinterpret_cast<char*>(v), sizeof v);
        p = Point3(v[0], v[1], v[2]);
      }
      if (!in) bad(path, "truncated vertex data");
    }
  } else {
    for (auto& p : scan.points) {
      if (!std::getline(in, line)) bad(path, "truncated vertex data");
      // strtod keeps the 17-digit values bit-exact
      char* end = line.data();
      for (int a = 0; a < 3; ++a) {
        char* next = nullptr;
        p[a] = std::strtod(end, &next);
        if (next == end) bad(path, "malformed vertex line");
        end = next;
      }
    }
  }
  return scan;
}

std::string format_tum_line(const TimedPose& tp) {
  const Eigen::Quaterniond q = tp.pose.quaternion();
  const Vec3& t = tp.pose.translation;
  std::string s = fmt(tp.timestamp);
  for (double v : {t.x(), t.y(), t.z(), q.x(), q.y(), q.z(), q.w()}) {
    s += ' ';
    s += fmt(v);
  }
  return s;
}

void write_tum(const fs::path& path, const std::vector<TimedPose>& poses) {
  auto out = open_out(path);
  for (const auto& p : poses) out << format_tum_line(p) << '\n';
  if (!out) bad(path, "write failed");
}

std::vector<TimedPose> read_tum(const fs::path& path) {
  auto in = open_in(path);
  std::vector<TimedPose> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    double v[8];
    for (double& x : v) {
      if (!(ls >> x)) bad(path, "malformed trajectory line: " + line);
    }
    const Eigen::Quaterniond q(v[7], v[4], v[5], v[6]);
    out.push_back({v[0], Pose::from_quaternion(q, Vec3(v[1], v[2], v[3]))});
  }
  return out;
}

void write_imu_csv(const fs::path& path, const std::vector<ImuSample>& samples) {
  auto out = open_out(path);
  out << "timestamp,ax,ay,az,gx,gy,gz\n";
  for (const auto& s : samples) {
    out << fmt(s.timestamp);
    for (int a = 0; a < 3; ++a) out << ',' << fmt(s.accel[a]);
    for (int a = 0; a < 3; ++a) out << ',' << fmt(s.gyro[a]);
    out << '\n';
  }
  if (!out) bad(path, "write failed");
}

std::vector<ImuSample> read_imu_csv(const fs::path& path) {
  auto in = open_in(path);
  std::vector<ImuSample> out;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    ImuSample s;
    if (!(ls >> s.timestamp >> s.accel.x() >> s.accel.y() >> s.accel.z() >> s.gyro.x() >>
          s.gyro.y() >> s.gyro.z())) {
      bad(path, "malformed IMU line");
    }
    out.push_back(s);
  }
  return out;
}

std::vector<fs::path> list_scan_files(const fs::path& scans_dir) {
  if (!fs::is_directory(scans_dir)) throw Error(ErrorCode::Io, "no scan directory " + scans_dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(scans_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".ply") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

void write_session(const fs::path& dir, const SessionData& session, PlyEncoding encoding) {
  fs::create_directories(dir / "scans");
  for (std::size_t i = 0; i < session.scans.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "%06zu.ply", i);
    write_ply(dir / "scans" / name, session.scans[i], encoding);
  }
  write_imu_csv(dir / "imu.csv", session.imu);
  write_tum(dir / "groundtruth.txt", session.ground_truth);

  const NavState& s0 = session.initial;
  const Eigen::Quaterniond q = s0.pose.quaternion();
  nlohmann::json j;
  j["name"] = session.name;
  j["world_id"] = session.world_id;
  j["scan_count"] = session.scans.size();
  j["initial"] = {
      {"timestamp", s0.timestamp},
      {"position", {s0.pose.translation.x(), s0.pose.translation.y(), s0.pose.translation.z()}},
      {"quaternion_xyzw", {q.x(), q.y(), q.z(), q.w()}},
      {"velocity", {s0.velocity.x(), s0.velocity.y(), s0.velocity.z()}},
  };
  auto out = open_out(dir / "session.json");
  out << j.dump(2) << '\n';
}

SessionData read_session(const fs::path& dir) {
  SessionData s;
  nlohmann::json j;
  try {
    auto in = open_in(dir / "session.json");
    j = nlohmann::json::parse(in);
    s.name = j.value("name", std::string());
    s.world_id = j.value("world_id", std::string());
    const auto& init = j.at("initial");
    const auto p = init.at("position").get<std::vector<double>>();
    const auto q = init.at("quaternion_xyzw").get<std::vector<double>>();
    const auto v = init.at("velocity").get<std::vector<double>>();
    if (p.size() != 3 || q.size() != 4 || v.size() != 3) bad(dir / "session.json", "bad initial state");
    s.initial.timestamp = init.at("timestamp").get<double>();
    s.initial.pose = Pose::from_quaternion(Eigen::Quaterniond(q[3], q[0], q[1], q[2]), Vec3(p[0], p[1], p[2]));
    s.initial.velocity = Vec3(v[0], v[1], v[2]);
  } catch (const nlohmann::json::exception& e) {
    bad(dir / "session.json", e.what());
  }

  for (const auto& f : list_scan_files(dir / "scans")) s.scans.push_back(read_ply(f, Frame::Body));
  s.imu = read_imu_csv(dir / "imu.csv");
  if (fs::exists(dir / "groundtruth.txt")) s.ground_truth = read_tum(dir / "groundtruth.txt");
  if (j.contains("scan_count") && j["scan_count"].get<std::size_t>() != s.scans.size()) {
    throw Error(ErrorCode::CountMismatch, "session.json scan_count does not match scans/");
  }
  return s;
}

}  // namespace llloc
