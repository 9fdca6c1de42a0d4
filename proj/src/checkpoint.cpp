#include "eegvc/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "eegvc/binio.hpp"

namespace eegvc {

namespace {

constexpr char kMagic[9] = "EEGVCKPT";
constexpr std::uint16_t kVersion = 1;

void write_entry(std::ofstream& out, const std::string& name,
                 const std::vector<std::size_t>& dims,
                 const std::vector<double>& data) {
  binio::write_str(out, name);
  binio::write_u8(out, static_cast<std::uint8_t>(dims.size()));
  std::size_t n = 1;
  for (std::size_t d : dims) {
    binio::write_u32(out, static_cast<std::uint32_t>(d));
    n *= d;
  }
  if (n != data.size()) {
    throw Error("checkpoint: entry " + name + " dims disagree with buffer");
  }
  for (double v : data) binio::write_f64(out, v);
}

struct Entry {
  std::string name;
  std::vector<std::size_t> dims;
  std::vector<double> data;
};

Entry read_entry(std::ifstream& in) {
  Entry e;
  e.name = binio::read_str(in, "entry name");
  const std::uint8_t rank = binio::read_u8(in, "entry rank");
  std::size_t n = 1;
  for (std::uint8_t i = 0; i < rank; ++i) {
    const std::uint32_t d = binio::read_u32(in, "entry dims");
    e.dims.push_back(d);
    n *= d;
  }
  e.data.resize(n);
  for (double& v : e.data) v = binio::read_f64(in, e.name.c_str());
  return e;
}

void check_match(const Entry& e, const ParamView& pv) {
  if (e.name != pv.name) {
    throw FormatError("checkpoint: expected entry '" + pv.name + "', found '" +
                      e.name + "'");
  }
  if (e.dims != pv.dims || e.data.size() != pv.data->size()) {
    std::string want, got;
    for (std::size_t d : pv.dims) want += std::to_string(d) + ",";
    for (std::size_t d : e.dims) got += std::to_string(d) + ",";
    throw FormatError("checkpoint: layer '" + pv.name + "' dims (" + got +
                      ") do not match this build (" + want + ")");
  }
}

}  // namespace

void save_checkpoint(const Generator& net, const AdamState* opt,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);

  NetParams copy = net.params();
  const std::vector<ParamView> views = param_views(copy, net.config());

  binio::write_bytes(out, kMagic, 8);
  binio::write_u16(out, kVersion);
  binio::write_u32(out, static_cast<std::uint32_t>(views.size()));
  for (const ParamView& pv : views) write_entry(out, pv.name, pv.dims, *pv.data);

  binio::write_u8(out, opt ? 1 : 0);
  if (opt) {
    if (opt->m.size() != views.size()) {
      throw Error("checkpoint: optimizer state does not match parameter list");
    }
    binio::write_u64(out, opt->t);
    binio::write_f64(out, opt->cfg.lr);
    binio::write_f64(out, opt->cfg.beta1);
    binio::write_f64(out, opt->cfg.beta2);
    binio::write_f64(out, opt->cfg.eps);
    for (std::size_t i = 0; i < views.size(); ++i) {
      write_entry(out, views[i].name + ".m", {opt->m[i].size()}, opt->m[i]);
    }
    for (std::size_t i = 0; i < views.size(); ++i) {
      write_entry(out, views[i].name + ".v", {opt->v[i].size()}, opt->v[i]);
    }
  }
}

CheckpointInfo load_checkpoint(Generator& net, AdamState* opt,
                               const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);

  char magic[8];
  binio::read_bytes(in, magic, 8, "magic");
  if (std::memcmp(magic, kMagic, 8) != 0) {
    throw FormatError("not a checkpoint file (bad magic): " + path);
  }
  const std::uint16_t version = binio::read_u16(in, "version");
  if (version != kVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }

  const std::vector<ParamView> views = param_views(net.params(), net.config());
  const std::uint32_t count = binio::read_u32(in, "entry count");
  if (count != views.size()) {
    throw FormatError("checkpoint holds " + std::to_string(count) +
                      " entries, this build expects " +
                      std::to_string(views.size()));
  }
  for (const ParamView& pv : views) {
    Entry e = read_entry(in);
    check_match(e, pv);
    *pv.data = std::move(e.data);
  }

  CheckpointInfo info;
  info.has_adam = binio::read_u8(in, "adam flag") != 0;
  if (info.has_adam && opt) {
    opt->t = binio::read_u64(in, "adam t");
    opt->cfg.lr = binio::read_f64(in, "adam lr");
    opt->cfg.beta1 = binio::read_f64(in, "adam beta1");
    opt->cfg.beta2 = binio::read_f64(in, "adam beta2");
    opt->cfg.eps = binio::read_f64(in, "adam eps");
    opt->m.resize(views.size());
    opt->v.resize(views.size());
    for (std::size_t i = 0; i < views.size(); ++i) {
      Entry e = read_entry(in);
      if (e.name != views[i].name + ".m" || e.data.size() != views[i].data->size()) {
        throw FormatError("checkpoint: bad adam m entry '" + e.name + "'");
      }
      opt->m[i] = std::move(e.data);
    }
    for (std::size_t i = 0; i < views.size(); ++i) {
      Entry e = read_entry(in);
      if (e.name != views[i].name + ".v" || e.data.size() != views[i].data->size()) {
        throw FormatError("checkpoint: bad adam v entry '" + e.name + "'");
      }
      opt->v[i] = std::move(e.data);
    }
  }
  return info;
}

}  // namespace eegvc
