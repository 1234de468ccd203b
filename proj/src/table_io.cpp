#include "semcert/table_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "semcert/certify.hpp"
#include "semcert/errors.hpp"

namespace semcert {
namespace {

using Json = nlohmann::ordered_json;

Json to_json(const Params& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Params params_from(const Json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Params>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::string bound_table_to_json(const StoredTable& stored) {
  const BoundTable& t = stored.table;
  Json grid;
  grid["beta0"] = to_json(t.grid.beta0);
  grid["lower"] = to_json(t.grid.lower);
  grid["upper"] = to_json(t.grid.upper);
  grid["shape"] = t.grid.shape;
  Json points = Json::array();
  for (const auto& p : t.grid.points) points.push_back(to_json(p));
  grid["points"] = std::move(points);

  Json rays = Json::array();
  for (const auto& r : t.rays) {
    rays.push_back({{"direction", to_json(r.direction)}, {"radii", r.radii}, {"magnitude", r.magnitude}});
  }
  Json doc;
  doc["format"] = "semcert.bounds";
  doc["version"] = kBoundTableVersion;
  doc["config_digest"] = stored.config_digest;
  doc["description"] = stored.description;
  doc["seed"] = t.seed;
  doc["n_samples"] = t.n_samples;
  doc["scale"] = t.scale;
  doc["grid"] = std::move(grid);
  doc["point_ray"] = t.point_ray;
  doc["g"] = t.g;
  doc["rays"] = std::move(rays);
  doc["warnings"] = t.warnings;
  doc["p"] = t.p;
  doc["certifier"] = {{"ghat", Certifier(t).ghat_endpoints()}};
  return doc.dump(1) + "\n";
}

StoredTable bound_table_from_json(const std::string& text) {
  StoredTable out;
  try {
    const Json doc = Json::parse(text);
    if (doc.value("format", "") != "semcert.bounds") throw FormatError("not a bound table");
    if (doc.at("version").get<int>() != kBoundTableVersion) {
      throw FormatError("unsupported bound table version " + doc.at("version").dump());
    }
    out.config_digest = doc.at("config_digest").get<std::string>();
    out.description = doc.value("description", "");
    BoundTable& t = out.table;
    t.seed = doc.at("seed").get<std::uint64_t>();
    t.n_samples = doc.at("n_samples").get<std::size_t>();
    t.scale = doc.at("scale").get<double>();
    const Json& grid = doc.at("grid");
    t.grid.beta0 = params_from(grid.at("beta0"));
    t.grid.lower = params_from(grid.at("lower"));
    t.grid.upper = params_from(grid.at("upper"));
    t.grid.shape = grid.at("shape").get<std::vector<std::size_t>>();
    for (const auto& p : grid.at("points")) t.grid.points.push_back(params_from(p));
    t.point_ray = doc.at("point_ray").get<std::vector<long>>();
    t.g = doc.at("g").get<std::vector<double>>();
    for (const auto& r : doc.at("rays")) {
      t.rays.push_back(Ray{params_from(r.at("direction")), r.at("radii").get<std::vector<double>>(),
                           r.at("magnitude").get<std::vector<double>>()});
    }
    t.warnings = doc.at("warnings").get<std::vector<std::string>>();
    t.p = doc.at("p").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed bound table: ") + e.what());
  }
  const BoundTable& t = out.table;
  if (t.point_ray.size() != t.grid.points.size() || t.g.size() != t.grid.points.size() ||
      t.p.size() != t.n_samples + 1) {
    throw FormatError("bound table arrays are inconsistent");
  }
  for (long r : t.point_ray) {
    if (r >= static_cast<long>(t.rays.size())) throw FormatError("bound table references a missing ray");
  }
  return out;
}

void save_bound_table(const StoredTable& stored, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << bound_table_to_json(stored);
  if (!out) throw IoError("write failed for " + path.string());
}

StoredTable load_bound_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw MissingArtifactError("bound table not found: " + path.string() + " (run `semcert bounds` first)");
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return bound_table_from_json(buf.str());
}

}  // namespace semcert
