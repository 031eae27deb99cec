#include "fewskel/checkpoint.hpp"

#include <array>
#include <atomic>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "detail/number_format.hpp"
#include "fewskel/error.hpp"
#include "fewskel/file_util.hpp"

namespace fewskel {
namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int decode_char(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

}  // namespace

std::string base64_encode(std::string_view bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= bytes.size(); i += 3) {
    const auto n = (static_cast<unsigned char>(bytes[i]) << 16) |
                   (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                   static_cast<unsigned char>(bytes[i + 2]);
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += kAlphabet[(n >> 6) & 63];
    out += kAlphabet[n & 63];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    const auto n = static_cast<unsigned char>(bytes[i]) << 16;
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += "==";
  } else if (rest == 2) {
    const auto n = (static_cast<unsigned char>(bytes[i]) << 16) |
                   (static_cast<unsigned char>(bytes[i + 1]) << 8);
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += kAlphabet[(n >> 6) & 63];
    out += '=';
  }
  return out;
}

std::string base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw Error(ErrorCode::malformed_json, "base64 length not a multiple of 4");
  std::string out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int v[4];
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=' && i + 4 == text.size() && k >= 2) {
        v[k] = 0;
        ++pad;
      } else {
        if (pad) throw Error(ErrorCode::malformed_json, "invalid base64 padding");
        v[k] = decode_char(c);
        if (v[k] < 0) throw Error(ErrorCode::malformed_json, "invalid base64 character");
      }
    }
    const unsigned n = (v[0] << 18) | (v[1] << 12) | (v[2] << 6) | v[3];
    out += static_cast<char>((n >> 16) & 0xFF);
    if (pad < 2) out += static_cast<char>((n >> 8) & 0xFF);
    if (pad < 1) out += static_cast<char>(n & 0xFF);
  }
  return out;
}

std::string serialize_checkpoint(const GamModel& model, const LossConfig& loss) {
  std::string raw;
  raw.reserve(model.parameter_count() * 8);
  for (const double p : model.parameters()) {
    const auto bits = std::bit_cast<std::uint64_t>(p);
    for (int b = 0; b < 8; ++b) raw += static_cast<char>((bits >> (8 * b)) & 0xFF);
  }
  std::string out = "{\"format_version\":" + std::to_string(kCheckpointFormatVersion);
  out += ",\"architecture\":{\"type\":\"mlp_tanh\",\"input_frames\":" +
         std::to_string(model.input_frames()) + ",\"joints\":" + std::to_string(kJointCount) +
         ",\"hidden_width\":" + std::to_string(model.hidden_width()) +
         ",\"outputs\":" + std::to_string(GamModel::kOutputs) + "}";
  out += ",\"seed\":" + std::to_string(model.seed());
  out += ",\"loss\":{\"w1\":";
  detail::append_double(out, loss.w1);
  out += ",\"w2\":";
  detail::append_double(out, loss.w2);
  out += "},\"parameter_count\":" + std::to_string(model.parameter_count());
  out += ",\"parameter_encoding\":\"base64-f64le\",\"parameters\":\"" + base64_encode(raw) + "\"}\n";
  return out;
}

Checkpoint parse_checkpoint(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::malformed_json, std::string("checkpoint: ") + e.what());
  }
  try {
    if (j.at("format_version").get<int>() != kCheckpointFormatVersion) {
      throw Error(ErrorCode::format_version, "unsupported checkpoint format_version");
    }
    const auto& arch = j.at("architecture");
    if (arch.at("type").get<std::string>() != "mlp_tanh" ||
        arch.at("joints").get<std::size_t>() != kJointCount ||
        arch.at("outputs").get<int>() != GamModel::kOutputs) {
      throw Error(ErrorCode::validation, "unsupported checkpoint architecture");
    }
    if (j.at("parameter_encoding").get<std::string>() != "base64-f64le") {
      throw Error(ErrorCode::validation, "unsupported parameter encoding");
    }
    GamModel model(arch.at("input_frames").get<int>(), arch.at("hidden_width").get<int>());
    model.set_seed(j.at("seed").get<std::uint64_t>());
    const std::string raw = base64_decode(j.at("parameters").get<std::string>());
    const auto count = j.at("parameter_count").get<std::size_t>();
    if (raw.size() != count * 8) {
      throw Error(ErrorCode::validation, "parameter payload does not match parameter_count");
    }
    std::vector<double> params(count);
    for (std::size_t i = 0; i < count; ++i) {
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) {
        bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(raw[i * 8 + b])) << (8 * b);
      }
      params[i] = std::bit_cast<double>(bits);
    }
    model.set_parameters(std::move(params));
    LossConfig loss{j.at("loss").at("w1").get<double>(), j.at("loss").at("w2").get<double>()};
    return {std::move(model), loss};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::malformed_json, std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const GamModel& model,
                     const LossConfig& loss) {
  write_file_atomic(path, serialize_checkpoint(model, loss));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(read_file(path));
}

std::string loss_history_csv(const std::vector<EpochStats>& history) {
  std::string out = "epoch,mean_loss,mean_rot,mean_rec\n";
  for (const EpochStats& e : history) {
    out += std::to_string(e.epoch);
    out += ',';
    detail::append_double(out, e.mean_loss);
    out += ',';
    detail::append_double(out, e.mean_rot);
    out += ',';
    detail::append_double(out, e.mean_rec);
    out += '\n';
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  static std::atomic<std::uint64_t> counter{0};
  std::filesystem::path tmp = path;
  tmp += ".tmp" + std::to_string(counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::io, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::io, "cannot rename " + tmp.string() + ": " + ec.message());
}

}  // namespace fewskel
