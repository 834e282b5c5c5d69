#include "layoutforge/ingest.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace layoutforge {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Error context: file name plus JSON pointer of the offending field.
struct Where {
  std::string file;
  std::string path;

  Where operator/(const std::string& key) const { return {file, path + "/" + key}; }
  Where operator/(std::size_t i) const { return {file, path + "/" + std::to_string(i)}; }
  [[noreturn]] void fail(ErrorCode code, const std::string& what) const {
    throw Error(code, file + ":" + (path.empty() ? "/" : path) + ": " + what);
  }
};

const json& field(const json& j, const std::string& key, const Where& at) {
  if (!j.is_object()) at.fail(ErrorCode::Parse, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) at.fail(ErrorCode::Parse, "missing field '" + key + "'");
  return *it;
}

double get_number(const json& j, const Where& at) {
  if (!j.is_number()) at.fail(ErrorCode::Parse, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) at.fail(ErrorCode::Parse, "non-finite number");
  return v;
}

int get_int(const json& j, const Where& at) {
  if (!j.is_number_integer()) at.fail(ErrorCode::Parse, "expected an integer");
  return j.get<int>();
}

std::string get_string(const json& j, const Where& at) {
  if (!j.is_string()) at.fail(ErrorCode::Parse, "expected a string");
  return j.get<std::string>();
}

const json& get_array(const json& j, const Where& at, std::optional<std::size_t> size = {}) {
  if (!j.is_array()) at.fail(ErrorCode::Parse, "expected an array");
  if (size && j.size() != *size) {
    at.fail(ErrorCode::Parse, "expected " + std::to_string(*size) + " elements");
  }
  return j;
}

Vec3 get_vec3(const json& j, const Where& at) {
  get_array(j, at, 3);
  return {get_number(j[0], at / 0), get_number(j[1], at / 1), get_number(j[2], at / 2)};
}

Mat3 get_mat3(const json& j, const Where& at) {
  get_array(j, at, 3);
  Mat3 m;
  for (int r = 0; r < 3; ++r) {
    const Vec3 row = get_vec3(j[r], at / static_cast<std::size_t>(r));
    m.row(r) = row.transpose();
  }
  return m;
}

json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json to_json(const Mat3& m) {
  json rows = json::array();
  for (int r = 0; r < 3; ++r) rows.push_back(json::array({m(r, 0), m(r, 1), m(r, 2)}));
  return rows;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "missing file " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

std::vector<std::uint32_t> get_runs(const json& j, const Where& at) {
  get_array(j, at);
  std::vector<std::uint32_t> runs;
  runs.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number_unsigned() && !(j[i].is_number_integer() && j[i].get<long long>() >= 0)) {
      (at / i).fail(ErrorCode::Parse, "run lengths must be non-negative integers");
    }
    runs.push_back(j[i].get<std::uint32_t>());
  }
  return runs;
}

std::set<MaskId> get_id_set(const json& j, const Where& at) {
  std::set<MaskId> out;
  get_array(j, at);
  for (std::size_t i = 0; i < j.size(); ++i) out.insert(get_int(j[i], at / i));
  return out;
}

json to_json(const VoxelGrid& g) {
  return {{"origin", to_json(g.origin)},
          {"cell", g.cell},
          {"dims", json::array({g.dims[0], g.dims[1], g.dims[2]})},
          {"rle", rle_encode_bits(g.bits)}};
}

VoxelGrid voxel_from_json(const json& j, const Where& at) {
  VoxelGrid g;
  g.origin = get_vec3(field(j, "origin", at), at / "origin");
  g.cell = get_number(field(j, "cell", at), at / "cell");
  const json& d = get_array(field(j, "dims", at), at / "dims", 3);
  for (int a = 0; a < 3; ++a) g.dims[a] = get_int(d[a], at / "dims" / static_cast<std::size_t>(a));
  if (g.dims[0] <= 0 || g.dims[1] <= 0 || g.dims[2] <= 0 || !(g.cell > 0)) {
    at.fail(ErrorCode::Validation, "voxel dims and cell must be positive");
  }
  const std::size_t n = static_cast<std::size_t>(g.dims[0]) * g.dims[1] * g.dims[2];
  try {
    g.bits = rle_decode_bits(get_runs(field(j, "rle", at), at / "rle"), n);
  } catch (const Error& e) {
    (at / "rle").fail(ErrorCode::Validation, e.what());
  }
  return g;
}

fs::path query_patch_file(MaskId id) { return "query_" + std::to_string(id) + ".bin"; }
fs::path query_global_file(MaskId id) { return "query_" + std::to_string(id) + "_cls.bin"; }

}  // namespace

// ---------------------------------------------------------------- categories

void CategoryMap::add(const std::string& library_category, const std::string& detector_category) {
  auto it = forward_.find(library_category);
  if (it != forward_.end()) {
    if (it->second == detector_category) return;
    inverse_[it->second].erase(library_category);
    if (inverse_[it->second].empty()) inverse_.erase(it->second);
  }
  forward_[library_category] = detector_category;
  inverse_[detector_category].insert(library_category);
}

const std::set<std::string>& CategoryMap::preimage(const std::string& detector_category) const {
  static const std::set<std::string> kEmpty;
  auto it = inverse_.find(detector_category);
  return it == inverse_.end() ? kEmpty : it->second;
}

std::optional<std::string> CategoryMap::detector_of(const std::string& library_category) const {
  auto it = forward_.find(library_category);
  if (it == forward_.end()) return std::nullopt;
  return it->second;
}

std::string to_string(ScaleMode mode) {
  switch (mode) {
    case ScaleMode::HeightFree: return "height_free";
    case ScaleMode::TwoLongAxes: return "two_long_axes";
    case ScaleMode::FullyFree: return "fully_free";
  }
  return "fully_free";
}

ScaleMode scale_mode_from_string(const std::string& s) {
  if (s == "height_free") return ScaleMode::HeightFree;
  if (s == "two_long_axes") return ScaleMode::TwoLongAxes;
  if (s == "fully_free") return ScaleMode::FullyFree;
  throw Error(ErrorCode::Parse, "unknown scale mode '" + s + "'");
}

std::string to_string(SupportKind kind) {
  switch (kind) {
    case SupportKind::None: return "none";
    case SupportKind::Floor: return "floor";
    case SupportKind::Contact: return "contact";
    case SupportKind::Internal: return "internal";
    case SupportKind::Ceiling: return "ceiling";
  }
  return "none";
}

SupportKind support_kind_from_string(const std::string& s) {
  for (SupportKind k : {SupportKind::None, SupportKind::Floor, SupportKind::Contact,
                        SupportKind::Internal, SupportKind::Ceiling}) {
    if (to_string(k) == s) return k;
  }
  throw Error(ErrorCode::Parse, "unknown support kind '" + s + "'");
}

const Asset* AssetManifest::find(const AssetId& id) const {
  for (const Asset& a : assets) {
    if (a.id == id) return &a;
  }
  return nullptr;
}

void AssetManifest::validate() const {
  std::set<AssetId> seen;
  for (const Asset& a : assets) {
    if (!seen.insert(a.id).second) {
      throw Error(ErrorCode::Validation, "duplicate asset id '" + a.id + "'");
    }
    if ((a.extents.array() <= 0).any()) {
      throw Error(ErrorCode::Validation, "asset '" + a.id + "': extents must be positive");
    }
    if (!categories.detector_of(a.category)) {
      throw Error(ErrorCode::Validation,
                  "asset '" + a.id + "': category '" + a.category + "' missing from category map");
    }
    const Vec3 half = 0.5 * a.extents + Vec3::Constant(1e-9);
    for (const Subspace& s : a.subspaces) {
      if ((s.lo.array() < -half.array()).any() || (s.hi.array() > half.array()).any() ||
          (s.lo.array() > s.hi.array()).any()) {
        throw Error(ErrorCode::Validation, "asset '" + a.id + "': subspace outside its box");
      }
    }
    a.voxel.validate();
  }
}

const Asset& AssetLibrary::asset(const AssetId& id) const {
  const Asset* a = manifest.find(id);
  if (!a) throw Error(ErrorCode::DanglingId, "unknown asset '" + id + "'");
  return *a;
}

const Mask& SceneBundle::mask(MaskId id) const {
  auto it = std::lower_bound(masks.begin(), masks.end(), id,
                             [](const Mask& m, MaskId v) { return m.id < v; });
  if (it == masks.end() || it->id != id) {
    throw Error(ErrorCode::DanglingId, "unknown mask id " + std::to_string(id));
  }
  return *it;
}

bool SceneBundle::has_mask(MaskId id) const {
  auto it = std::lower_bound(masks.begin(), masks.end(), id,
                             [](const Mask& m, MaskId v) { return m.id < v; });
  return it != masks.end() && it->id == id;
}

void SceneBundle::validate() const {
  camera.validate();
  depth.validate();
  if (depth.width != camera.width || depth.height != camera.height) {
    throw Error(ErrorCode::DimensionMismatch, "depth.pfm size differs from camera.json");
  }
  for (std::size_t i = 0; i < masks.size(); ++i) {
    const Mask& m = masks[i];
    if (m.id < 0) throw Error(ErrorCode::Validation, "mask ids must be non-negative");
    if (i > 0 && masks[i - 1].id >= m.id) {
      throw Error(ErrorCode::Validation, "mask ids must be unique and ascending");
    }
    if (m.bitmap.width != camera.width || m.bitmap.height != camera.height) {
      throw Error(ErrorCode::DimensionMismatch,
                  "mask " + std::to_string(m.id) + " size differs from the image");
    }
    if (!(tight_bbox(m.bitmap) == m.bbox)) {
      throw Error(ErrorCode::Validation,
                  "mask " + std::to_string(m.id) + ": bbox is not the tight bound of its bits");
    }
  }
  if (oracle) {
    auto check = [&](MaskId id, const char* what) {
      if (!has_mask(id)) {
        throw Error(ErrorCode::DanglingId, std::string("oracle.json: dangling id ") +
                                               std::to_string(id) + " in " + what);
      }
    };
    for (MaskId id : oracle->floor_supported) check(id, "floor_supported");
    for (MaskId id : oracle->ceiling_supported) {
      check(id, "ceiling_supported");
      if (oracle->floor_supported.count(id)) {
        throw Error(ErrorCode::Validation, "oracle.json: mask " + std::to_string(id) +
                                               " is both floor and ceiling supported");
      }
    }
    for (const auto& [id, wall] : oracle->wall_contacts) check(id, "wall_contacts");
    for (const auto& [pair, v] : oracle->occlusion_support) {
      check(pair.first, "occlusion_support");
      check(pair.second, "occlusion_support");
    }
    for (const auto& [id, dims] : oracle->object_dims) {
      check(id, "object_dims");
      if ((dims.array() <= 0).any()) {
        throw Error(ErrorCode::Validation,
                    "oracle.json: object_dims of " + std::to_string(id) + " must be positive");
      }
    }
    for (MaskId id : oracle->excluded) check(id, "excluded");
  }
  for (const auto& [id, f] : query_patches) {
    if (!has_mask(id)) throw Error(ErrorCode::DanglingId, "feature for unknown mask " + std::to_string(id));
  }
  for (const auto& [id, f] : query_globals) {
    if (!has_mask(id)) throw Error(ErrorCode::DanglingId, "feature for unknown mask " + std::to_string(id));
  }
}

void LayoutObject::validate() const {
  if (!is_rotation(R, 1e-6)) {
    throw Error(ErrorCode::Validation, "object " + std::to_string(source_mask) + ": R not in SO(3)");
  }
  if ((s.array() <= 0).any()) {
    throw Error(ErrorCode::Validation, "object " + std::to_string(source_mask) + ": scale must be positive");
  }
}

const LayoutObject* LayoutDocument::find(MaskId id) const {
  for (const LayoutObject& o : objects) {
    if (o.source_mask == id) return &o;
  }
  return nullptr;
}

// ---------------------------------------------------------------------- PFM

DepthMap read_pfm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "missing file " + path.string());
  std::string magic;
  int w = 0, h = 0;
  double scale = 0;
  in >> magic >> w >> h >> scale;
  if (!in || magic != "Pf") throw Error(ErrorCode::Parse, path.string() + ": not a grayscale PFM");
  if (w <= 0 || h <= 0 || w > 1 << 15 || h > 1 << 15) {
    throw Error(ErrorCode::Parse, path.string() + ": bad PFM size");
  }
  in.get();  // single whitespace after the scale
  const bool little = scale < 0;
  DepthMap d;
  d.width = w;
  d.height = h;
  d.values.resize(static_cast<std::size_t>(w) * h);
  std::vector<std::uint32_t> row(static_cast<std::size_t>(w));
  for (int r = 0; r < h; ++r) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * 4));
    if (!in) throw Error(ErrorCode::Parse, path.string() + ": truncated PFM data");
    const int v = h - 1 - r;  // bottom row first
    for (int u = 0; u < w; ++u) {
      std::uint32_t bits = row[u];
      if (little != (std::endian::native == std::endian::little)) bits = __builtin_bswap32(bits);
      d.at(u, v) = std::bit_cast<float>(bits);
    }
  }
  return d;
}

void write_pfm(const fs::path& path, const DepthMap& depth) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << "Pf\n" << depth.width << ' ' << depth.height << "\n-1\n";
  for (int v = depth.height - 1; v >= 0; --v) {
    out.write(reinterpret_cast<const char*>(&depth.values[static_cast<std::size_t>(v) * depth.width]),
              static_cast<std::streamsize>(depth.width) * 4);
  }
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

// ------------------------------------------------------------------- bundle

SceneBundle load_bundle(const fs::path& dir) {
  SceneBundle b;
  {
    const fs::path p = dir / "camera.json";
    const json j = read_json(p);
    const Where at{p.string(), ""};
    b.camera.fx = get_number(field(j, "fx", at), at / "fx");
    b.camera.fy = get_number(field(j, "fy", at), at / "fy");
    b.camera.cx = get_number(field(j, "cx", at), at / "cx");
    b.camera.cy = get_number(field(j, "cy", at), at / "cy");
    b.camera.width = get_int(field(j, "width", at), at / "width");
    b.camera.height = get_int(field(j, "height", at), at / "height");
    if (j.contains("gravity") && !j["gravity"].is_null()) {
      b.camera.gravity = get_vec3(j["gravity"], at / "gravity");
    }
    try {
      b.camera.validate();
    } catch (const Error& e) {
      at.fail(e.code(), e.what());
    }
  }
  b.depth = read_pfm(dir / "depth.pfm");
  try {
    b.depth.validate();
  } catch (const Error& e) {
    throw Error(e.code(), (dir / "depth.pfm").string() + ": " + e.what());
  }
  {
    const fs::path p = dir / "masks.json";
    const json j = read_json(p);
    const Where at{p.string(), ""};
    const json& list = get_array(field(j, "masks", at), at / "masks");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const Where mat = at / "masks" / i;
      Mask m;
      m.id = get_int(field(list[i], "id", mat), mat / "id");
      m.category = get_string(field(list[i], "category", mat), mat / "category");
      try {
        m.bitmap = rle_decode(get_runs(field(list[i], "rle", mat), mat / "rle"), b.camera.width,
                              b.camera.height);
      } catch (const Error& e) {
        (mat / "rle").fail(e.code(), e.what());
      }
      const json& bb = get_array(field(list[i], "bbox", mat), mat / "bbox", 4);
      m.bbox = {get_int(bb[0], mat / "bbox"), get_int(bb[1], mat / "bbox"),
                get_int(bb[2], mat / "bbox"), get_int(bb[3], mat / "bbox")};
      if (!(tight_bbox(m.bitmap) == m.bbox)) {
        (mat / "bbox").fail(ErrorCode::Validation, "not the tight bound of the mask bits");
      }
      b.masks.push_back(std::move(m));
    }
    std::sort(b.masks.begin(), b.masks.end(), [](const Mask& x, const Mask& y) { return x.id < y.id; });
  }
  if (fs::exists(dir / "oracle.json")) {
    const fs::path p = dir / "oracle.json";
    const json j = read_json(p);
    const Where at{p.string(), ""};
    OracleRecord o;
    auto opt = [&](const char* key) -> const json* {
      auto it = j.find(key);
      return it == j.end() ? nullptr : &*it;
    };
    if (auto* f = opt("floor_supported")) o.floor_supported = get_id_set(*f, at / "floor_supported");
    if (auto* f = opt("ceiling_supported")) o.ceiling_supported = get_id_set(*f, at / "ceiling_supported");
    if (auto* f = opt("excluded")) o.excluded = get_id_set(*f, at / "excluded");
    if (auto* f = opt("wall_contacts")) {
      get_array(*f, at / "wall_contacts");
      for (std::size_t i = 0; i < f->size(); ++i) {
        const Where w = at / "wall_contacts" / i;
        o.wall_contacts[get_int(field((*f)[i], "mask", w), w / "mask")] =
            get_int(field((*f)[i], "wall", w), w / "wall");
      }
    }
    if (auto* f = opt("occlusion_support")) {
      get_array(*f, at / "occlusion_support");
      for (std::size_t i = 0; i < f->size(); ++i) {
        const Where w = at / "occlusion_support" / i;
        const json& e = (*f)[i];
        const json& v = field(e, "supported", w);
        if (!v.is_boolean()) (w / "supported").fail(ErrorCode::Parse, "expected a boolean");
        o.occlusion_support[{get_int(field(e, "a", w), w / "a"), get_int(field(e, "b", w), w / "b")}] =
            v.get<bool>();
      }
    }
    if (auto* f = opt("object_dims")) {
      get_array(*f, at / "object_dims");
      for (std::size_t i = 0; i < f->size(); ++i) {
        const Where w = at / "object_dims" / i;
        o.object_dims[get_int(field((*f)[i], "mask", w), w / "mask")] =
            get_vec3(field((*f)[i], "dims", w), w / "dims");
      }
    }
    b.oracle = std::move(o);
  }
  const fs::path fdir = dir / "features";
  if (fs::is_directory(fdir)) {
    for (const Mask& m : b.masks) {
      if (fs::exists(fdir / query_patch_file(m.id))) {
        b.query_patches[m.id] = read_patch_features(fdir / query_patch_file(m.id));
      }
      if (fs::exists(fdir / query_global_file(m.id))) {
        b.query_globals[m.id] = read_global_feature(fdir / query_global_file(m.id));
      }
    }
  }
  b.validate();
  return b;
}

void save_bundle(const SceneBundle& b, const fs::path& dir) {
  fs::create_directories(dir);
  json cam = {{"fx", b.camera.fx}, {"fy", b.camera.fy}, {"cx", b.camera.cx},
              {"cy", b.camera.cy}, {"width", b.camera.width}, {"height", b.camera.height}};
  if (b.camera.gravity) cam["gravity"] = to_json(*b.camera.gravity);
  write_json(dir / "camera.json", cam);
  write_pfm(dir / "depth.pfm", b.depth);

  json masks = json::array();
  for (const Mask& m : b.masks) {
    masks.push_back({{"id", m.id},
                     {"category", m.category},
                     {"bbox", json::array({m.bbox.x0, m.bbox.y0, m.bbox.x1, m.bbox.y1})},
                     {"rle", rle_encode(m.bitmap)}});
  }
  write_json(dir / "masks.json", {{"width", b.camera.width}, {"height", b.camera.height}, {"masks", masks}});

  if (b.oracle) {
    const OracleRecord& o = *b.oracle;
    json walls = json::array(), occ = json::array(), dims = json::array();
    for (const auto& [id, w] : o.wall_contacts) walls.push_back({{"mask", id}, {"wall", w}});
    for (const auto& [p, v] : o.occlusion_support) {
      occ.push_back({{"a", p.first}, {"b", p.second}, {"supported", v}});
    }
    for (const auto& [id, d] : o.object_dims) dims.push_back({{"mask", id}, {"dims", to_json(d)}});
    write_json(dir / "oracle.json", {{"floor_supported", o.floor_supported},
                                     {"ceiling_supported", o.ceiling_supported},
                                     {"wall_contacts", walls},
                                     {"occlusion_support", occ},
                                     {"object_dims", dims},
                                     {"excluded", o.excluded}});
  }
  if (!b.query_patches.empty() || !b.query_globals.empty()) {
    fs::create_directories(dir / "features");
    for (const auto& [id, f] : b.query_patches) write_patch_features(dir / "features" / query_patch_file(id), f);
    for (const auto& [id, f] : b.query_globals) write_global_feature(dir / "features" / query_global_file(id), f);
  }
}

// ------------------------------------------------------------------ library

AssetLibrary load_library(const fs::path& dir) {
  const fs::path p = dir / "assets.json";
  const json j = read_json(p);
  const Where at{p.string(), ""};
  AssetLibrary lib;
  const json& cats = field(j, "categories", at);
  if (!cats.is_object()) (at / "categories").fail(ErrorCode::Parse, "expected an object");
  for (const auto& [lib_cat, det] : cats.items()) {
    lib.manifest.categories.add(lib_cat, get_string(det, at / "categories" / lib_cat));
  }
  const json& list = get_array(field(j, "assets", at), at / "assets");
  for (std::size_t i = 0; i < list.size(); ++i) {
    const Where a = at / "assets" / i;
    const json& e = list[i];
    Asset asset;
    asset.id = get_string(field(e, "id", a), a / "id");
    asset.category = get_string(field(e, "category", a), a / "category");
    asset.extents = get_vec3(field(e, "extents", a), a / "extents");
    try {
      asset.scale_mode = scale_mode_from_string(get_string(field(e, "scale_mode", a), a / "scale_mode"));
    } catch (const Error& err) {
      (a / "scale_mode").fail(ErrorCode::Parse, err.what());
    }
    if (e.contains("subspaces")) {
      const json& subs = get_array(e["subspaces"], a / "subspaces");
      for (std::size_t k = 0; k < subs.size(); ++k) {
        const Where s = a / "subspaces" / k;
        asset.subspaces.push_back({get_vec3(field(subs[k], "lo", s), s / "lo"),
                                   get_vec3(field(subs[k], "hi", s), s / "hi")});
      }
    }
    asset.voxel = voxel_from_json(field(e, "voxel", a), a / "voxel");
    if (e.contains("template_views")) {
      const json& views = get_array(e["template_views"], a / "template_views");
      for (std::size_t k = 0; k < views.size(); ++k) {
        const Where v = a / "template_views" / k;
        TemplateView tv;
        tv.rotation = get_mat3(field(views[k], "rotation", v), v / "rotation");
        if (!is_rotation(tv.rotation, 1e-6)) (v / "rotation").fail(ErrorCode::Validation, "not a rotation");
        tv.feature = get_string(field(views[k], "feature", v), v / "feature");
        asset.template_views.push_back(std::move(tv));
      }
    }
    if (e.contains("thumbnail_views")) {
      const json& views = get_array(e["thumbnail_views"], a / "thumbnail_views");
      for (std::size_t k = 0; k < views.size(); ++k) {
        asset.thumbnail_views.push_back(get_string(views[k], a / "thumbnail_views" / k));
      }
    }
    lib.manifest.assets.push_back(std::move(asset));
  }
  try {
    lib.manifest.validate();
  } catch (const Error& e) {
    throw Error(e.code(), p.string() + ": " + e.what());
  }
  for (const Asset& asset : lib.manifest.assets) {
    auto& tmpl = lib.templates[asset.id];
    for (const TemplateView& v : asset.template_views) tmpl.push_back(read_patch_features(dir / v.feature));
    auto& thumbs = lib.thumbnails[asset.id];
    for (const std::string& f : asset.thumbnail_views) thumbs.push_back(read_global_feature(dir / f));
  }
  return lib;
}

void save_library(const AssetLibrary& lib, const fs::path& dir) {
  fs::create_directories(dir / "features");
  json cats = json::object();
  for (const auto& [lib_cat, det] : lib.manifest.categories.forward()) cats[lib_cat] = det;
  json assets = json::array();
  for (const Asset& a : lib.manifest.assets) {
    json subs = json::array();
    for (const Subspace& s : a.subspaces) subs.push_back({{"lo", to_json(s.lo)}, {"hi", to_json(s.hi)}});
    json views = json::array();
    for (const TemplateView& v : a.template_views) {
      views.push_back({{"rotation", to_json(v.rotation)}, {"feature", v.feature}});
    }
    assets.push_back({{"id", a.id},
                      {"category", a.category},
                      {"extents", to_json(a.extents)},
                      {"scale_mode", to_string(a.scale_mode)},
                      {"subspaces", subs},
                      {"voxel", to_json(a.voxel)},
                      {"template_views", views},
                      {"thumbnail_views", a.thumbnail_views}});
    auto tmpl = lib.templates.find(a.id);
    if (tmpl != lib.templates.end()) {
      for (std::size_t k = 0; k < a.template_views.size() && k < tmpl->second.size(); ++k) {
        write_patch_features(dir / a.template_views[k].feature, tmpl->second[k]);
      }
    }
    auto thumbs = lib.thumbnails.find(a.id);
    if (thumbs != lib.thumbnails.end()) {
      for (std::size_t k = 0; k < a.thumbnail_views.size() && k < thumbs->second.size(); ++k) {
        write_global_feature(dir / a.thumbnail_views[k], thumbs->second[k]);
      }
    }
  }
  write_json(dir / "assets.json", {{"categories", cats}, {"assets", assets}});
}

// ------------------------------------------------------------------- layout

void save_layout(const LayoutDocument& doc, const fs::path& path) {
  json objects = json::array();
  for (const LayoutObject& o : doc.objects) {
    const Eigen::Vector4d q = to_quaternion_wxyz(o.R);
    objects.push_back({{"mask", o.source_mask},
                       {"asset_id", o.asset_id},
                       {"category", o.category},
                       {"asset_category", o.asset_category},
                       {"R", to_json(o.R)},
                       {"quaternion_wxyz", json::array({q[0], q[1], q[2], q[3]})},
                       {"t", to_json(o.t)},
                       {"s", to_json(o.s)},
                       {"extents", to_json(o.extents)},
                       {"support",
                        {{"kind", to_string(o.support.kind)},
                         {"parent", o.support.parent},
                         {"d_vertical", o.support.d_vertical}}},
                       {"wall", o.wall ? json(*o.wall) : json(nullptr)}});
  }
  json walls = json::array();
  for (std::size_t i = 0; i < doc.room.walls.size(); ++i) {
    json w = {{"n", to_json(doc.room.walls[i].n)}, {"d", doc.room.walls[i].d}};
    if (i < doc.room.wall_lengths.size()) w["length"] = doc.room.wall_lengths[i];
    walls.push_back(w);
  }
  json j = {{"objects", objects},
            {"camera_from_world", {{"R", to_json(doc.camera_R)}, {"t", to_json(doc.camera_t)}}},
            {"room",
             {{"floor_height", doc.room.floor_height},
              {"ceiling_height", doc.room.ceiling_height ? json(*doc.room.ceiling_height) : json(nullptr)},
              {"walls", walls}}},
            {"warnings", doc.warnings}};
  write_json(path, j);
}

LayoutDocument load_layout(const fs::path& path) {
  const json j = read_json(path);
  const Where at{path.string(), ""};
  LayoutDocument doc;
  const json& objects = get_array(field(j, "objects", at), at / "objects");
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const Where w = at / "objects" / i;
    const json& e = objects[i];
    LayoutObject o;
    o.source_mask = get_int(field(e, "mask", w), w / "mask");
    o.asset_id = get_string(field(e, "asset_id", w), w / "asset_id");
    o.category = get_string(field(e, "category", w), w / "category");
    o.asset_category = e.contains("asset_category") ? get_string(e["asset_category"], w / "asset_category") : "";
    o.R = get_mat3(field(e, "R", w), w / "R");
    o.t = get_vec3(field(e, "t", w), w / "t");
    o.s = get_vec3(field(e, "s", w), w / "s");
    o.extents = get_vec3(field(e, "extents", w), w / "extents");
    if (e.contains("support")) {
      const json& s = e["support"];
      const Where sw = w / "support";
      try {
        o.support.kind = support_kind_from_string(get_string(field(s, "kind", sw), sw / "kind"));
      } catch (const Error& err) {
        (sw / "kind").fail(ErrorCode::Parse, err.what());
      }
      o.support.parent = get_int(field(s, "parent", sw), sw / "parent");
      o.support.d_vertical = get_number(field(s, "d_vertical", sw), sw / "d_vertical");
    }
    if (e.contains("wall") && !e["wall"].is_null()) o.wall = get_int(e["wall"], w / "wall");
    try {
      o.validate();
    } catch (const Error& err) {
      w.fail(err.code(), err.what());
    }
    doc.objects.push_back(std::move(o));
  }
  if (j.contains("camera_from_world")) {
    const Where cw = at / "camera_from_world";
    doc.camera_R = get_mat3(field(j["camera_from_world"], "R", cw), cw / "R");
    doc.camera_t = get_vec3(field(j["camera_from_world"], "t", cw), cw / "t");
  }
  if (j.contains("room")) {
    const json& r = j["room"];
    const Where rw = at / "room";
    doc.room.floor_height = get_number(field(r, "floor_height", rw), rw / "floor_height");
    if (r.contains("ceiling_height") && !r["ceiling_height"].is_null()) {
      doc.room.ceiling_height = get_number(r["ceiling_height"], rw / "ceiling_height");
    }
    if (r.contains("walls")) {
      const json& walls = get_array(r["walls"], rw / "walls");
      for (std::size_t i = 0; i < walls.size(); ++i) {
        const Where ww = rw / "walls" / i;
        Plane p{get_vec3(field(walls[i], "n", ww), ww / "n"), get_number(field(walls[i], "d", ww), ww / "d")};
        doc.room.walls.push_back(p);
        if (walls[i].contains("length")) doc.room.wall_lengths.push_back(get_number(walls[i]["length"], ww / "length"));
      }
    }
  }
  if (j.contains("warnings")) {
    for (const json& w : j["warnings"]) doc.warnings.push_back(w.get<std::string>());
  }
  return doc;
}

}  // namespace layoutforge
