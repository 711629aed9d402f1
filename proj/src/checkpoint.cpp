#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "pimns/errors.hpp"
#include "pimns/model.hpp"

namespace pimns {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

void save_checkpoint(const ModelBundle& bundle, const std::filesystem::path& path) {
  nlohmann::json manifest;
  manifest["config"] = to_json(bundle.config());
  manifest["tokenizer"] = to_json(bundle.tokenizer());
  auto tensors = nlohmann::json::array();
  std::size_t offset = 0;
  const auto specs = required_tensors(bundle.config());
  for (const auto& s : specs) {
    tensors.push_back({{"name", s.name}, {"rows", s.rows}, {"cols", s.cols}, {"offset", offset}});
    offset += s.rows * s.cols * sizeof(float);
  }
  manifest["tensors"] = std::move(tensors);
  manifest["blob_bytes"] = offset;

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot write checkpoint '{}'", path.string()));
  out << kCheckpointMagic << manifest.dump() << '\n';
  for (const auto& s : specs) {
    const auto& data = bundle.weight(s.name).data();
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(float)));
  }
  if (!out) throw IoError(fmt::format("write failed for checkpoint '{}'", path.string()));
}

ModelBundle load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open checkpoint '{}'", path.string()));
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (bytes.compare(0, kCheckpointMagic.size(), kCheckpointMagic) != 0) {
    throw CheckpointFormatError("bad magic header");
  }
  const std::size_t manifest_begin = kCheckpointMagic.size();
  const std::size_t manifest_end = bytes.find('\n', manifest_begin);
  if (manifest_end == std::string::npos) throw CheckpointFormatError("truncated manifest");

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.substr(manifest_begin, manifest_end - manifest_begin));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointFormatError(std::string("manifest is not valid JSON: ") + e.what());
  }

  try {
    const ModelConfig config = config_from_json(manifest.at("config"));
    Tokenizer tokenizer = tokenizer_from_json(manifest.at("tokenizer"));
    const std::string_view blob = std::string_view(bytes).substr(manifest_end + 1);
    const std::size_t declared = manifest.at("blob_bytes").get<std::size_t>();
    if (blob.size() < declared) {
      throw CheckpointFormatError(fmt::format("truncated blob: {} of {} bytes", blob.size(), declared));
    }
    if (blob.size() > declared) throw CheckpointFormatError("trailing bytes after blob");

    WeightStore weights;
    for (const auto& t : manifest.at("tensors")) {
      const std::string name = t.at("name").get<std::string>();
      const std::size_t rows = t.at("rows").get<std::size_t>();
      const std::size_t cols = t.at("cols").get<std::size_t>();
      const std::size_t offset = t.at("offset").get<std::size_t>();
      const std::size_t nbytes = rows * cols * sizeof(float);
      if (offset > blob.size() || nbytes > blob.size() - offset) {
        throw CheckpointFormatError(fmt::format("tensor '{}' lies outside the blob", name));
      }
      std::vector<float> data(rows * cols);
      std::memcpy(data.data(), blob.data() + offset, nbytes);
      if (!weights.emplace(name, Tensor2D(rows, cols, std::move(data))).second) {
        throw CheckpointFormatError(fmt::format("duplicate tensor '{}'", name));
      }
    }
    validate_weights(config, weights);
    return ModelBundle(config, std::move(weights), std::move(tokenizer));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointFormatError(std::string("manifest: ") + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointFormatError(std::string("manifest: ") + e.what());
  }
}

}  // namespace pimns
