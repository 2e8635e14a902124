#include "llloc/config.hpp"

#include "llloc/errors.hpp"
#include "llloc/scenarios.hpp"

#include "json.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace llloc {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); }

template <typename E>
struct EnumNames {
  std::vector<std::pair<E, const char*>> names;

  const char* name(E e) const {
    for (const auto& [v, n] : names) {
      if (v == e) return n;
    }
    return "?";
  }
  E value(const std::string& s, const std::string& key) const {
    for (const auto& [v, n] : names) {
      if (s == n) return v;
    }
    invalid(key + ": unknown value '" + s + "'");
  }
};

const EnumNames<FovMode> kFov{{{FovMode::Narrow, "narrow"}, {FovMode::Wide, "wide"}}};
const EnumNames<ResidualMode> kResidual{
    {{ResidualMode::MeanPerCorrespondence, "mean"}, {ResidualMode::RawSum, "raw"}}};
const EnumNames<PlyEncoding> kPly{
    {{PlyEncoding::Ascii, "ascii"}, {PlyEncoding::BinaryFloat32, "binary_float32"}}};

// Writes fields into a json tree.
struct Writer {
  json root = json::object();

  template <typename T>
  void field(const char* section, const char* key, T& v) {
    root[section][key] = v;
  }
  void field(const char* section, const char* key, Vec3& v) {
    root[section][key] = {v.x(), v.y(), v.z()};
  }
  template <typename E>
  void enumeration(const char* section, const char* key, E& v, const EnumNames<E>& names) {
    root[section][key] = names.name(v);
  }
  void pose(const char* section, const char* key, std::optional<Pose>& p) {
    if (!p) {
      root[section][key] = nullptr;
      return;
    }
    const auto q = p->quaternion();
    root[section][key] = {{"position", {p->translation.x(), p->translation.y(), p->translation.z()}},
                          {"quaternion_xyzw", {q.x(), q.y(), q.z(), q.w()}}};
  }
};

// Reads fields present in a json tree and remembers which keys it consumed.
struct Reader {
  const json& root;
  std::set<std::string> used;

  const json* find(const char* section, const char* key) {
    auto s = root.find(section);
    if (s == root.end()) return nullptr;
    if (!s->is_object()) invalid(std::string(section) + " must be an object");
    auto k = s->find(key);
    if (k == s->end()) return nullptr;
    used.insert(std::string(section) + "." + key);
    return &*k;
  }
  template <typename T>
  void field(const char* section, const char* key, T& v) {
    if (const json* j = find(section, key)) {
      try {
        v = j->get<T>();
      } catch (const json::exception& e) {
        invalid(std::string(section) + "." + key + ": " + e.what());
      }
    }
  }
  void field(const char* section, const char* key, Vec3& v) {
    if (const json* j = find(section, key)) {
      if (!j->is_array() || j->size() != 3) invalid(std::string(section) + "." + key + ": need [x, y, z]");
      v = Vec3((*j)[0].get<double>(), (*j)[1].get<double>(), (*j)[2].get<double>());
    }
  }
  template <typename E>
  void enumeration(const char* section, const char* key, E& v, const EnumNames<E>& names) {
    if (const json* j = find(section, key)) {
      v = names.value(j->get<std::string>(), std::string(section) + "." + key);
    }
  }
  void pose(const char* section, const char* key, std::optional<Pose>& p) {
    const json* j = find(section, key);
    if (!j) return;
    if (j->is_null()) {
      p.reset();
      return;
    }
    try {
      const auto t = j->at("position").get<std::vector<double>>();
      const auto q = j->at("quaternion_xyzw").get<std::vector<double>>();
      if (t.size() != 3 || q.size() != 4) invalid("initial_pose: bad sizes");
      p = Pose::from_quaternion(Eigen::Quaterniond(q[3], q[0], q[1], q[2]), Vec3(t[0], t[1], t[2]));
    } catch (const json::exception& e) {
      invalid(std::string("initial_pose: ") + e.what());
    }
  }
};

template <typename Archive>
void visit(Archive& ar, PipelineConfig& c) {
  ar.field("map", "resolution", c.map.resolution);
  ar.field("map", "hash_prime_x", c.map.primes.x);
  ar.field("map", "hash_prime_y", c.map.primes.y);
  ar.field("map", "hash_prime_z", c.map.primes.z);
  ar.field("map", "octree_min_extent", c.map.octree.min_extent);
  ar.field("map", "octree_bucket_size", c.map.octree.bucket_size);
  ar.field("map", "promote_threshold", c.map.promote_threshold);
  ar.field("map", "match_radius", c.map.match_radius);
  ar.field("map", "match_min_neighbors", c.map.match_min_neighbors);
  ar.field("map", "match_max_neighbors", c.map.match_max_neighbors);
  ar.field("map", "match_max_distance", c.map.match_max_distance);

  ar.field("loading", "phi1_factor", c.phi1_factor);
  ar.field("loading", "phi2_factor", c.phi2_factor);
  ar.field("loading", "w_n", c.loading.w_n);
  ar.field("loading", "w_g", c.loading.w_g);
  ar.field("loading", "w_l", c.loading.w_l);

  auto& r = c.registration;
  ar.field("registration", "search_radius", r.search_radius);
  ar.field("registration", "min_neighbors", r.min_neighbors);
  ar.field("registration", "max_neighbors", r.max_neighbors);
  ar.field("registration", "planarity_ratio", r.planarity_ratio);
  ar.field("registration", "linearity_ratio", r.linearity_ratio);
  ar.field("registration", "fit_tolerance", r.fit_tolerance);
  ar.field("registration", "max_iterations", r.max_iterations);
  ar.field("registration", "delta", r.delta);
  ar.enumeration("registration", "residual_mode", r.residual_mode, kResidual);
  ar.field("registration", "lambda_init", r.lambda_init);
  ar.field("registration", "lambda_min", r.lambda_min);
  ar.field("registration", "lambda_max", r.lambda_max);
  ar.field("registration", "max_damping_attempts", r.max_damping_attempts);

  ar.field("imu", "gravity", c.imu.gravity);
  ar.field("imu", "max_gap", c.imu.max_gap);

  auto& s = c.sensor;
  ar.enumeration("sensor", "fov_mode", s.fov_mode, kFov);
  ar.field("sensor", "theta_l", s.theta_l);
  ar.field("sensor", "horizontal_rays", s.horizontal_rays);
  ar.field("sensor", "vertical_rays", s.vertical_rays);
  ar.field("sensor", "elevation_min", s.elevation_min);
  ar.field("sensor", "elevation_max", s.elevation_max);
  ar.field("sensor", "d_min", s.d_min);
  ar.field("sensor", "d_max", s.d_max);
  ar.field("sensor", "scan_rate", s.scan_rate);
  ar.field("sensor", "range_noise_sigma", s.range_noise_sigma);
  ar.field("sensor", "imu_rate", s.imu_rate);
  ar.field("sensor", "accel_noise_sigma", s.accel_noise_sigma);
  ar.field("sensor", "gyro_noise_sigma", s.gyro_noise_sigma);
  ar.field("sensor", "accel_bias", s.accel_bias);
  ar.field("sensor", "gyro_bias", s.gyro_bias);

  ar.pose("pipeline", "initial_pose", c.initial_pose);
  ar.field("pipeline", "scan_voxel", c.scan_voxel);
  ar.field("pipeline", "prior_voxel", c.prior_voxel);
  ar.field("pipeline", "time_budget_ms", c.time_budget_ms);
  ar.enumeration("pipeline", "map_encoding", c.map_encoding, kPly);
  ar.field("pipeline", "prior_map", c.prior_map);
  ar.field("pipeline", "session_dir", c.session_dir);
  ar.field("pipeline", "output_dir", c.output_dir);

  ar.field("bench", "frames", c.bench.frames);
  ar.field("bench", "queries_per_frame", c.bench.queries_per_frame);
  ar.field("bench", "radius", c.bench.radius);
  ar.field("bench", "blocks", c.bench.blocks);
  ar.field("bench", "points_per_block", c.bench.points_per_block);
  ar.field("bench", "inserts_per_frame", c.bench.inserts_per_frame);
  ar.field("bench", "seed", c.bench.seed);
}

}  // namespace

void PipelineConfig::finalize() {
  sensor.validate();
  loading.fov_mode = sensor.fov_mode;
  loading.theta_l = sensor.theta_l;
  loading.d_min = sensor.d_min;
  loading.d_max = sensor.d_max;
  loading.phi1 = phi1_factor * sensor.d_max;
  loading.phi2 = phi2_factor * sensor.d_max;
  loading.delta = registration.delta;
  loading.max_converge_iters = registration.max_iterations;
  loading.validate();
  registration.validate();
  if (!(map.resolution > 0.0) || !map.octree.valid() || map.promote_threshold < 1) {
    invalid("map: resolution, octree and promote_threshold must be positive");
  }
  if (map.match_max_neighbors < map.match_min_neighbors || map.match_min_neighbors < 3) {
    invalid("map: need 3 <= match_min_neighbors <= match_max_neighbors");
  }
  if (!(map.match_radius > 0.0) || !(map.match_max_distance >= 0.0)) {
    invalid("map: match_radius must be positive and match_max_distance non-negative");
  }
  if (scan_voxel < 0.0 || prior_voxel < 0.0) invalid("pipeline: voxel sizes must be >= 0");
  if (!(time_budget_ms > 0.0)) invalid("pipeline: time_budget_ms must be positive");
  if (!(imu.max_gap > 0.0)) invalid("imu: max_gap must be positive");
  if (!(bench.radius > 0.0) || bench.frames == 0) invalid("bench: radius and frames must be positive");
}

PipelineConfig default_pipeline_config() {
  PipelineConfig c;
  c.finalize();
  return c;
}

PipelineConfig scenario_pipeline_config() {
  PipelineConfig c;
  c.sensor = scenario_sensor();
  c.phi1_factor = 0.8;
  c.phi2_factor = 0.6;
  c.registration.delta = 5e-3;
  c.scan_voxel = 0.1;
  c.prior_voxel = 0.3;
  c.finalize();
  return c;
}

PipelineConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    invalid(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) invalid("config root must be an object");
  PipelineConfig c;
  Reader reader{root, {}};
  visit(reader, c);
  static const std::set<std::string> kSections{"map",    "loading", "registration", "imu",
                                                "sensor", "pipeline", "bench"};
  for (const auto& [section, body] : root.items()) {
    if (!body.is_object() || !kSections.count(section)) invalid("unknown config entry: " + section);
    for (const auto& [key, value] : body.items()) {
      if (!reader.used.count(section + "." + key)) invalid("unknown config key: " + section + "." + key);
    }
  }
  c.finalize();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const PipelineConfig& cfg) {
  PipelineConfig copy = cfg;
  Writer w;
  visit(w, copy);
  return w.root.dump(2) + "\n";
}

}  // namespace llloc
