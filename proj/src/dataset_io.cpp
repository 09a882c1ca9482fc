#include "mvsfuse/dataset_io.hpp"

#include <png.h>

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "mvsfuse/errors.hpp"

namespace mvsfuse {

namespace {

using nlohmann::json;

float byteswap_float(float v) {
  std::uint32_t u;
  std::memcpy(&u, &v, 4);
  u = ((u & 0x000000ffu) << 24) | ((u & 0x0000ff00u) << 8) |
      ((u & 0x00ff0000u) >> 8) | ((u & 0xff000000u) >> 24);
  std::memcpy(&v, &u, 4);
  return v;
}

void write_pfm_raw(const float* data, int width, int height,
                   const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << "Pf\n" << width << " " << height << "\n-1.0\n";
  // PFM scanlines run bottom-to-top.
  std::vector<float> row(static_cast<std::size_t>(width));
  for (int y = height - 1; y >= 0; --y) {
    const float* src = data + static_cast<std::size_t>(y) * width;
    if constexpr (std::endian::native == std::endian::big) {
      for (int x = 0; x < width; ++x) row[x] = byteswap_float(src[x]);
      out.write(reinterpret_cast<const char*>(row.data()),
                static_cast<std::streamsize>(width) * 4);
    } else {
      out.write(reinterpret_cast<const char*>(src),
                static_cast<std::streamsize>(width) * 4);
    }
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::string next_pfm_token(std::istream& in) {
  std::string tok;
  in >> tok;
  return tok;
}

std::vector<float> read_pfm_raw(const std::filesystem::path& path, int& width,
                                int& height) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  const std::string magic = next_pfm_token(in);
  if (magic == "PF")
    throw UnsupportedFormat("color PFM not supported: " + path.string());
  if (magic != "Pf")
    throw MalformedHeader("not a PFM file: " + path.string());
  const std::string ws = next_pfm_token(in);
  const std::string hs = next_pfm_token(in);
  const std::string ss = next_pfm_token(in);
  double scale = 0.0;
  try {
    width = std::stoi(ws);
    height = std::stoi(hs);
    scale = std::stod(ss);
  } catch (const std::exception&) {
    throw MalformedHeader("malformed PFM header: " + path.string());
  }
  if (width < 1 || height < 1 || scale == 0.0 || !std::isfinite(scale))
    throw MalformedHeader("malformed PFM header: " + path.string());
  in.get();  // single whitespace byte after the scale line
  std::vector<float> data(static_cast<std::size_t>(width) * height);
  std::vector<float> row(static_cast<std::size_t>(width));
  const bool file_little = scale < 0.0;
  const bool host_little = std::endian::native == std::endian::little;
  for (int y = height - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(width) * 4);
    if (!in) throw MalformedHeader("truncated PFM data: " + path.string());
    float* dst = data.data() + static_cast<std::size_t>(y) * width;
    if (file_little == host_little) {
      std::memcpy(dst, row.data(), static_cast<std::size_t>(width) * 4);
    } else {
      for (int x = 0; x < width; ++x) dst[x] = byteswap_float(row[x]);
    }
  }
  return data;
}

}  // namespace

void write_pfm(const DepthMap& map, const std::filesystem::path& path) {
  if (map.width < 1 || map.height < 1)
    throw IoError("write_pfm: empty depth map");
  write_pfm_raw(map.data.data(), map.width, map.height, path);
}

DepthMap read_pfm(const std::filesystem::path& path) {
  DepthMap map;
  map.data = read_pfm_raw(path, map.width, map.height);
  return map;
}

void write_pfm(const ConfidenceMap& map, const std::filesystem::path& path) {
  if (map.width < 1 || map.height < 1)
    throw IoError("write_pfm: empty confidence map");
  std::vector<float> data(map.pixel_count());
  for (std::size_t i = 0; i < data.size(); ++i)
    data[i] = map.valid[i] ? map.data[i] : -1.0f;
  write_pfm_raw(data.data(), map.width, map.height, path);
}

ConfidenceMap read_pfm_confidence(const std::filesystem::path& path) {
  int w = 0, h = 0;
  const std::vector<float> data = read_pfm_raw(path, w, h);
  ConfidenceMap map(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const float v = data[static_cast<std::size_t>(y) * w + x];
      if (std::isfinite(v) && v >= 0.0f)
        map.set(x, y, std::min(v, 1.0f), true);
      else
        map.set(x, y, 0.0f, false);
    }
  return map;
}

namespace {

struct PngWriteCtx {
  png_structp png = nullptr;
  png_infop info = nullptr;
  FILE* fp = nullptr;
  ~PngWriteCtx() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    if (fp) std::fclose(fp);
  }
};

struct PngReadCtx {
  png_structp png = nullptr;
  png_infop info = nullptr;
  FILE* fp = nullptr;
  ~PngReadCtx() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    if (fp) std::fclose(fp);
  }
};

void write_png_bytes(const std::vector<std::uint8_t>& bytes, int width,
                     int height, int channels,
                     const std::filesystem::path& path) {
  PngWriteCtx ctx;
  ctx.fp = std::fopen(path.string().c_str(), "wb");
  if (!ctx.fp) throw IoError("cannot open for writing: " + path.string());
  ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                    nullptr);
  if (!ctx.png) throw IoError("png_create_write_struct failed");
  ctx.info = png_create_info_struct(ctx.png);
  if (!ctx.info) throw IoError("png_create_info_struct failed");
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y)
    rows[y] = const_cast<png_bytep>(bytes.data() +
                                    static_cast<std::size_t>(y) * width *
                                        channels);
  if (setjmp(png_jmpbuf(ctx.png)))
    throw IoError("png write failed: " + path.string());
  png_init_io(ctx.png, ctx.fp);
  png_set_IHDR(ctx.png, ctx.info, static_cast<png_uint_32>(width),
               static_cast<png_uint_32>(height), 8,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(ctx.png, ctx.info);
  png_write_image(ctx.png, rows.data());
  png_write_end(ctx.png, nullptr);
}

std::vector<std::uint8_t> read_png_bytes(const std::filesystem::path& path,
                                         int& width, int& height,
                                         int& channels) {
  PngReadCtx ctx;
  ctx.fp = std::fopen(path.string().c_str(), "rb");
  if (!ctx.fp) throw IoError("cannot open for reading: " + path.string());
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, ctx.fp) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw UnsupportedFormat("not a PNG file: " + path.string());
  ctx.png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!ctx.png) throw IoError("png_create_read_struct failed");
  ctx.info = png_create_info_struct(ctx.png);
  if (!ctx.info) throw IoError("png_create_info_struct failed");
  std::vector<std::uint8_t> bytes;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(ctx.png)))
    throw IoError("png read failed: " + path.string());
  png_init_io(ctx.png, ctx.fp);
  png_set_sig_bytes(ctx.png, 8);
  png_read_info(ctx.png, ctx.info);
  const png_uint_32 w = png_get_image_width(ctx.png, ctx.info);
  const png_uint_32 h = png_get_image_height(ctx.png, ctx.info);
  const int depth = png_get_bit_depth(ctx.png, ctx.info);
  const int color = png_get_color_type(ctx.png, ctx.info);
  if (depth != 8 ||
      (color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_RGB))
    throw UnsupportedFormat("only 8-bit gray/RGB PNG supported: " +
                            path.string());
  width = static_cast<int>(w);
  height = static_cast<int>(h);
  channels = (color == PNG_COLOR_TYPE_GRAY) ? 1 : 3;
  bytes.assign(static_cast<std::size_t>(width) * height * channels, 0);
  rows.resize(static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y)
    rows[y] = bytes.data() + static_cast<std::size_t>(y) * width * channels;
  png_read_image(ctx.png, rows.data());
  png_read_end(ctx.png, nullptr);
  return bytes;
}

}  // namespace

void write_image(const Image& img, const std::filesystem::path& path) {
  if (img.channels != 1 && img.channels != 3)
    throw UnsupportedFormat("write_image: 1 or 3 channels required");
  std::vector<std::uint8_t> bytes(img.data.size());
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    const double v = std::clamp(static_cast<double>(img.data[i]), 0.0, 1.0);
    bytes[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
  }
  write_png_bytes(bytes, img.width, img.height, img.channels, path);
}

Image read_image(const std::filesystem::path& path) {
  int w = 0, h = 0, c = 0;
  const auto bytes = read_png_bytes(path, w, h, c);
  Image img(w, h, c);
  for (std::size_t i = 0; i < bytes.size(); ++i)
    img.data[i] = static_cast<float>(bytes[i]) / 255.0f;
  return img;
}

void write_mask(const std::vector<std::uint8_t>& mask, int width, int height,
                const std::filesystem::path& path) {
  if (mask.size() != static_cast<std::size_t>(width) * height)
    throw DimensionMismatch("write_mask: size mismatch");
  std::vector<std::uint8_t> bytes(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) bytes[i] = mask[i] ? 255 : 0;
  write_png_bytes(bytes, width, height, 1, path);
}

std::vector<std::uint8_t> read_mask(const std::filesystem::path& path,
                                    int* width, int* height) {
  int w = 0, h = 0, c = 0;
  const auto bytes = read_png_bytes(path, w, h, c);
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(w) * h, 0);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    for (int ch = 0; ch < c; ++ch)
      if (bytes[i * c + ch] != 0) mask[i] = 1;
  }
  if (width) *width = w;
  if (height) *height = h;
  return mask;
}

namespace {

std::string frame_stem(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d", i);
  return buf;
}

json pose_to_json(const Pose& p) {
  json j;
  json rot = json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) rot.push_back(p.rotation(r, c));
  json t = json::array();
  for (int i = 0; i < 3; ++i) t.push_back(p.translation[i]);
  j["rotation"] = rot;
  j["translation"] = t;
  return j;
}

const json& require_field(const json& j, const std::string& field,
                          const std::string& where) {
  auto it = j.find(field);
  if (it == j.end())
    throw SchemaViolation("missing field: " + where + field);
  return *it;
}

double require_number(const json& j, const std::string& field,
                      const std::string& where) {
  const json& v = require_field(j, field, where);
  if (!v.is_number())
    throw SchemaViolation("field is not a number: " + where + field);
  return v.get<double>();
}

Pose pose_from_json(const json& j, const std::string& where) {
  const json& rot = require_field(j, "rotation", where);
  const json& t = require_field(j, "translation", where);
  if (!rot.is_array() || rot.size() != 9)
    throw SchemaViolation("field must be 9 numbers: " + where + "rotation");
  if (!t.is_array() || t.size() != 3)
    throw SchemaViolation("field must be 3 numbers: " + where + "translation");
  Pose p;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      p.rotation(r, c) = rot[static_cast<std::size_t>(r * 3 + c)].get<double>();
  for (int i = 0; i < 3; ++i)
    p.translation[i] = t[static_cast<std::size_t>(i)].get<double>();
  const Eigen::Matrix3d delta =
      p.rotation.transpose() * p.rotation - Eigen::Matrix3d::Identity();
  if (delta.cwiseAbs().maxCoeff() > 1e-6)
    throw SchemaViolation(where + "rotation not orthonormal");
  if (p.rotation.determinant() < 0.0)
    throw SchemaViolation(where + "rotation not SO(3)");
  return p;
}

}  // namespace

std::filesystem::path save_sequence(const Sequence& seq,
                                    const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  bool any_dynamic = false;
  for (const auto& f : seq.frames)
    for (auto m : f.dynamic_mask)
      if (m) any_dynamic = true;

  json manifest;
  manifest["version"] = 1;
  manifest["intrinsics"] = {
      {"fx", seq.intrinsics.fx},     {"fy", seq.intrinsics.fy},
      {"cx", seq.intrinsics.cx},     {"cy", seq.intrinsics.cy},
      {"width", seq.intrinsics.width}, {"height", seq.intrinsics.height}};
  json frames = json::array();
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    const Frame& f = seq.frames[i];
    const std::string stem = frame_stem(static_cast<int>(i));
    json jf;
    jf["image_path"] = "image_" + stem + ".png";
    write_image(f.image, dir / ("image_" + stem + ".png"));
    if (f.gt_depth.width > 0) {
      jf["gt_depth_path"] = "depth_" + stem + ".pfm";
      write_pfm(f.gt_depth, dir / ("depth_" + stem + ".pfm"));
    }
    if (any_dynamic) {
      jf["dynamic_mask_path"] = "mask_" + stem + ".png";
      write_mask(f.dynamic_mask, f.image.width, f.image.height,
                 dir / ("mask_" + stem + ".png"));
    }
    jf["cam_to_world"] = pose_to_json(f.cam_to_world);
    frames.push_back(jf);
  }
  manifest["frames"] = frames;

  const fs::path manifest_path = dir / "manifest.json";
  std::ofstream out(manifest_path);
  if (!out) throw IoError("cannot write " + manifest_path.string());
  out << manifest.dump(2) << "\n";
  return manifest_path;
}

LoadedSequence load_sequence(const std::filesystem::path& manifest_path) {
  namespace fs = std::filesystem;
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open " + manifest_path.string());
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw SchemaViolation(std::string("manifest is not valid JSON: ") +
                          e.what());
  }
  static const char* kTopKeys[] = {"version", "intrinsics", "frames"};
  for (auto it = manifest.begin(); it != manifest.end(); ++it) {
    bool known = false;
    for (const char* k : kTopKeys) known |= it.key() == k;
    if (!known) throw SchemaViolation("unknown field: " + it.key());
  }
  const json& version = require_field(manifest, "version", "");
  if (!version.is_number_integer() || version.get<int>() != 1)
    throw SchemaViolation("version: expected 1");

  const json& ji = require_field(manifest, "intrinsics", "");
  LoadedSequence seq;
  seq.intrinsics.fx = require_number(ji, "fx", "intrinsics.");
  seq.intrinsics.fy = require_number(ji, "fy", "intrinsics.");
  seq.intrinsics.cx = require_number(ji, "cx", "intrinsics.");
  seq.intrinsics.cy = require_number(ji, "cy", "intrinsics.");
  seq.intrinsics.width =
      static_cast<int>(require_number(ji, "width", "intrinsics."));
  seq.intrinsics.height =
      static_cast<int>(require_number(ji, "height", "intrinsics."));
  if (seq.intrinsics.fx <= 0 || seq.intrinsics.fy <= 0 ||
      seq.intrinsics.width < 1 || seq.intrinsics.height < 1)
    throw SchemaViolation("intrinsics: non-positive dimensions or focal");

  const json& jframes = require_field(manifest, "frames", "");
  if (!jframes.is_array() || jframes.empty())
    throw SchemaViolation("frames: expected non-empty array");

  const fs::path base = manifest_path.parent_path();
  auto resolve = [&](const json& jf, const char* field, std::size_t i,
                     bool required) -> fs::path {
    const std::string where = "frames[" + std::to_string(i) + "].";
    auto it = jf.find(field);
    if (it == jf.end()) {
      if (required) throw SchemaViolation("missing field: " + where + field);
      return {};
    }
    if (!it->is_string())
      throw SchemaViolation("field is not a string: " + where + field);
    fs::path p = base / it->get<std::string>();
    if (!fs::exists(p))
      throw SchemaViolation(where + field + ": file does not exist: " +
                            p.string());
    return p;
  };

  for (std::size_t i = 0; i < jframes.size(); ++i) {
    const json& jf = jframes[i];
    const std::string where = "frames[" + std::to_string(i) + "].";
    LoadedFrame frame;
    frame.image = read_image(resolve(jf, "image_path", i, true));
    if (frame.image.width != seq.intrinsics.width ||
        frame.image.height != seq.intrinsics.height)
      throw SchemaViolation(where + "image_path: size differs from intrinsics");
    const fs::path gt = resolve(jf, "gt_depth_path", i, false);
    if (!gt.empty()) {
      frame.gt_depth = read_pfm(gt);
      if (frame.gt_depth.width != seq.intrinsics.width ||
          frame.gt_depth.height != seq.intrinsics.height)
        throw SchemaViolation(where +
                              "gt_depth_path: size differs from intrinsics");
    }
    const fs::path mask = resolve(jf, "dynamic_mask_path", i, false);
    if (!mask.empty()) {
      int mw = 0, mh = 0;
      frame.dynamic_mask = read_mask(mask, &mw, &mh);
      if (mw != seq.intrinsics.width || mh != seq.intrinsics.height)
        throw SchemaViolation(
            where + "dynamic_mask_path: size differs from intrinsics");
    }
    const fs::path prior = resolve(jf, "prior_depth_path", i, false);
    if (!prior.empty()) frame.prior_depth_path = prior.string();
    frame.cam_to_world =
        pose_from_json(require_field(jf, "cam_to_world", where),
                       where + "cam_to_world.");
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

Sequence LoadedSequence::to_sequence() const {
  Sequence seq;
  seq.intrinsics = intrinsics;
  seq.frames.reserve(frames.size());
  for (const auto& f : frames) {
    Frame frame;
    frame.image = f.image;
    frame.gt_depth = f.gt_depth;
    frame.cam_to_world = f.cam_to_world;
    frame.dynamic_mask = f.dynamic_mask;
    if (frame.dynamic_mask.empty())
      frame.dynamic_mask.assign(frame.image.pixel_count(), 0);
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

}  // namespace mvsfuse
