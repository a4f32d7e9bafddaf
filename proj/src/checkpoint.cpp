#include "piig/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>
#include <vector>

namespace piig {

namespace {

constexpr char kMagic[4] = {'P', 'I', 'I', 'G'};

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (in.gcount() != 4) {
    throw std::runtime_error(path + ": truncated checkpoint");
  }
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32s(std::ostream& out, const float* v, std::size_t n) {
  static_assert(std::endian::native == std::endian::little,
                "payloads are written little-endian");
  out.write(reinterpret_cast<const char*>(v),
            static_cast<std::streamsize>(n * sizeof(float)));
}

struct Record {
  std::vector<std::uint32_t> dims;
  std::vector<float> payload;
};

void write_record(std::ostream& out, const std::string& name,
                  const std::vector<std::uint32_t>& dims,
                  const float* payload, std::size_t n) {
  put_u32(out, static_cast<std::uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  put_u32(out, static_cast<std::uint32_t>(dims.size()));
  std::size_t expect = 1;
  for (auto d : dims) {
    put_u32(out, d);
    expect *= d;
  }
  if (expect != n) {
    throw std::logic_error("checkpoint: record '" + name +
                           "' dims do not match payload");
  }
  put_f32s(out, payload, n);
}

void write_tensor_record(std::ostream& out, const std::string& name,
                         const Tensor& t) {
  const Shape4 s = t.shape();
  write_record(out, name,
               {static_cast<std::uint32_t>(s.n), static_cast<std::uint32_t>(s.c),
                static_cast<std::uint32_t>(s.h), static_cast<std::uint32_t>(s.w)},
               t.data(), static_cast<std::size_t>(s.numel()));
}

void write_vector_record(std::ostream& out, const std::string& name,
                         const std::vector<float>& v) {
  write_record(out, name, {static_cast<std::uint32_t>(v.size())}, v.data(),
               v.size());
}

void write_scalar_record(std::ostream& out, const std::string& name,
                         float v) {
  write_record(out, name, {1}, &v, 1);
}

void write_adam_records(std::ostream& out, const std::string& prefix,
                        const NetworkParams& params, const AdamState& opt) {
  write_scalar_record(out, prefix + "/step_count",
                      static_cast<float>(opt.step_count));
  for (std::size_t i = 0; i < params.items.size(); ++i) {
    write_vector_record(out, prefix + "/m/" + params.items[i].name, opt.m[i]);
    write_vector_record(out, prefix + "/v/" + params.items[i].name, opt.v[i]);
  }
}

std::size_t count_records(const NetworkParams& p) { return p.items.size(); }

using RecordMap = std::map<std::string, Record>;

const Record& need(const RecordMap& records, const std::string& name,
                   const std::string& path) {
  auto it = records.find(name);
  if (it == records.end()) {
    throw std::runtime_error(path + ": missing checkpoint record '" + name +
                             "'");
  }
  return it->second;
}

void load_params(const RecordMap& records, const std::string& prefix,
                 NetworkParams& params, const std::string& path) {
  for (auto& item : params.items) {
    const Record& r = need(records, prefix + item.name, path);
    if (static_cast<std::int64_t>(r.payload.size()) != item.tensor.numel()) {
      throw std::runtime_error(path + ": record '" + prefix + item.name +
                               "' has wrong size");
    }
    std::copy(r.payload.begin(), r.payload.end(), item.tensor.data());
  }
}

void load_adam(const RecordMap& records, const std::string& prefix,
               const NetworkParams& params, AdamState& opt,
               const std::string& path) {
  opt.step_count = static_cast<std::int64_t>(
      need(records, prefix + "/step_count", path).payload.at(0));
  for (std::size_t i = 0; i < params.items.size(); ++i) {
    const Record& m =
        need(records, prefix + "/m/" + params.items[i].name, path);
    const Record& v =
        need(records, prefix + "/v/" + params.items[i].name, path);
    if (m.payload.size() != opt.m[i].size() ||
        v.payload.size() != opt.v[i].size()) {
      throw std::runtime_error(path + ": optimizer record size mismatch for '" +
                               params.items[i].name + "'");
    }
    opt.m[i] = m.payload;
    opt.v[i] = v.payload;
  }
}

}  // namespace

void save_checkpoint(const std::string& path, const TrainConfig& cfg,
                     const TrainState& state) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out.write(kMagic, 4);
  put_u32(out, kCheckpointVersion);

  const std::string echo = config_to_text(cfg);
  put_u32(out, static_cast<std::uint32_t>(echo.size()));
  out.write(echo.data(), static_cast<std::streamsize>(echo.size()));

  NetworkParams pe = state.extractor.params("extractor");
  NetworkParams pg = state.generator.params("generator");
  NetworkParams pdg = state.critics.global_net.params("critic_global");
  NetworkParams pdl = state.critics.local_net.params("critic_local");

  const std::size_t n_params = count_records(pe) + count_records(pg) +
                               count_records(pdg) + count_records(pdl);
  // params + per-net (step_count + m + v) + rng + iteration
  const std::size_t total = n_params * 3 + 4 + 2;
  put_u32(out, static_cast<std::uint32_t>(total));

  for (const auto& p : {&pe, &pg, &pdg, &pdl}) {
    for (const auto& item : p->items) {
      write_tensor_record(out, "net/" + item.name, item.tensor);
    }
  }
  write_adam_records(out, "opt/extractor", pe, state.opt_extractor);
  write_adam_records(out, "opt/generator", pg, state.opt_generator);
  write_adam_records(out, "opt/critic_global", pdg, state.opt_global);
  write_adam_records(out, "opt/critic_local", pdl, state.opt_local);

  const std::string rng_text = state.rng.serialize();
  std::vector<float> rng_bytes(rng_text.size());
  for (std::size_t i = 0; i < rng_text.size(); ++i) {
    rng_bytes[i] = static_cast<float>(static_cast<unsigned char>(rng_text[i]));
  }
  write_vector_record(out, "rng/stream", rng_bytes);
  write_scalar_record(out, "meta/iteration",
                      static_cast<float>(state.iteration));
  if (!out) throw std::runtime_error(path + ": write failed");
}

TrainState load_checkpoint(const std::string& path, TrainConfig* config_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open");
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error(path + ": not a checkpoint (bad magic)");
  }
  const std::uint32_t version = get_u32(in, path);
  if (version != kCheckpointVersion) {
    throw std::runtime_error(path + ": checkpoint version " +
                             std::to_string(version) + " unsupported, want " +
                             std::to_string(kCheckpointVersion));
  }
  const std::uint32_t echo_len = get_u32(in, path);
  std::string echo(echo_len, '\0');
  in.read(echo.data(), echo_len);
  if (static_cast<std::uint32_t>(in.gcount()) != echo_len) {
    throw std::runtime_error(path + ": truncated config echo");
  }
  const TrainConfig cfg = parse_config_text(echo, path + " (config echo)");
  if (config_out) *config_out = cfg;

  const std::uint32_t n_records = get_u32(in, path);
  RecordMap records;
  for (std::uint32_t r = 0; r < n_records; ++r) {
    const std::uint32_t name_len = get_u32(in, path);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const std::uint32_t rank = get_u32(in, path);
    Record rec;
    std::size_t n = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      rec.dims.push_back(get_u32(in, path));
      n *= rec.dims.back();
    }
    rec.payload.resize(n);
    in.read(reinterpret_cast<char*>(rec.payload.data()),
            static_cast<std::streamsize>(n * sizeof(float)));
    if (static_cast<std::size_t>(in.gcount()) != n * sizeof(float)) {
      throw std::runtime_error(path + ": truncated record '" + name + "'");
    }
    records.emplace(std::move(name), std::move(rec));
  }

  TrainState state = TrainState::init(cfg);
  NetworkParams pe = state.extractor.params("extractor");
  NetworkParams pg = state.generator.params("generator");
  NetworkParams pdg = state.critics.global_net.params("critic_global");
  NetworkParams pdl = state.critics.local_net.params("critic_local");
  load_params(records, "net/", pe, path);
  load_params(records, "net/", pg, path);
  load_params(records, "net/", pdg, path);
  load_params(records, "net/", pdl, path);
  load_adam(records, "opt/extractor", pe, state.opt_extractor, path);
  load_adam(records, "opt/generator", pg, state.opt_generator, path);
  load_adam(records, "opt/critic_global", pdg, state.opt_global, path);
  load_adam(records, "opt/critic_local", pdl, state.opt_local, path);

  const Record& rng_rec = need(records, "rng/stream", path);
  std::string rng_text(rng_rec.payload.size(), '\0');
  for (std::size_t i = 0; i < rng_rec.payload.size(); ++i) {
    rng_text[i] = static_cast<char>(
        static_cast<unsigned char>(rng_rec.payload[i]));
  }
  state.rng = RngStream::deserialize(rng_text);
  state.iteration = static_cast<std::int64_t>(
      need(records, "meta/iteration", path).payload.at(0));
  return state;
}

}  // namespace piig
