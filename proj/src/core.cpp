#include "abcnn/dataset_io.hpp"
#include "abcnn/parallel.hpp"
#include "abcnn/types.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <thread>
#include <vector>

namespace abcnn {

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t Dataset::content_hash() const {
  std::uint64_t h = fnv1a_str(model_tag);
  h = fnv1a(&seed, sizeof(seed), h);
  auto q = param_dim(), p = data_dim(), n = size();
  h = fnv1a(&q, sizeof(q), h);
  h = fnv1a(&p, sizeof(p), h);
  h = fnv1a(&n, sizeof(n), h);
  h = fnv1a(thetas.data(), sizeof(double) * thetas.size(), h);
  h = fnv1a(xs.data(), sizeof(double) * xs.size(), h);
  h = fnv1a(splits.data(), splits.size(), h);
  return h;
}

namespace {

constexpr int kDatasetVersion = 1;

nlohmann::json read_header_line(std::istream& in, const std::string& path) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": missing header line");
  nlohmann::json hdr = nlohmann::json::parse(line, nullptr, false);
  if (hdr.is_discarded()) throw std::runtime_error(path + ": header is not valid JSON");
  return hdr;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
  ds.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("save_dataset: cannot open " + path);

  nlohmann::json hdr{{"format", "abcnn-dataset"},
                     {"version", kDatasetVersion},
                     {"model_tag", ds.model_tag},
                     {"q", ds.param_dim()},
                     {"p", ds.data_dim()},
                     {"n", ds.size()},
                     {"seed", ds.seed},
                     {"scalar", "f64-le"}};
  out << hdr.dump() << '\n';

  const auto q = ds.param_dim(), p = ds.data_dim();
  std::vector<char> rec(1 + sizeof(double) * static_cast<std::size_t>(q + p));
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    rec[0] = static_cast<char>(ds.splits[i]);
    std::memcpy(rec.data() + 1, ds.thetas.col(i).data(), sizeof(double) * q);
    std::memcpy(rec.data() + 1 + sizeof(double) * q, ds.xs.col(i).data(), sizeof(double) * p);
    out.write(rec.data(), static_cast<std::streamsize>(rec.size()));
  }
  if (!out) throw std::runtime_error("save_dataset: write failed for " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_dataset: cannot open " + path);

  nlohmann::json hdr = read_header_line(in, path);
  if (hdr.value("format", "") != "abcnn-dataset")
    throw std::runtime_error(path + ": not an abcnn dataset file");
  if (hdr.value("version", -1) != kDatasetVersion)
    throw std::runtime_error(path + ": unsupported dataset schema version");

  const auto q = hdr.at("q").get<Eigen::Index>();
  const auto p = hdr.at("p").get<Eigen::Index>();
  const auto n = hdr.at("n").get<Eigen::Index>();
  if (q < 1 || p < 1 || n < 1) throw std::runtime_error(path + ": degenerate dimensions in header");

  Dataset ds;
  ds.model_tag = hdr.value("model_tag", "");
  ds.seed = hdr.at("seed").get<std::uint64_t>();
  ds.thetas.resize(q, n);
  ds.xs.resize(p, n);
  ds.splits.resize(static_cast<std::size_t>(n));

  std::vector<char> rec(1 + sizeof(double) * static_cast<std::size_t>(q + p));
  for (Eigen::Index i = 0; i < n; ++i) {
    in.read(rec.data(), static_cast<std::streamsize>(rec.size()));
    if (in.gcount() != static_cast<std::streamsize>(rec.size()))
      throw std::runtime_error(path + ": record " + std::to_string(i) + ": unexpected end of file");
    auto s = static_cast<unsigned char>(rec[0]);
    if (s > 2) throw std::runtime_error(path + ": record " + std::to_string(i) + ": bad split label");
    ds.splits[static_cast<std::size_t>(i)] = static_cast<Split>(s);
    std::memcpy(ds.thetas.col(i).data(), rec.data() + 1, sizeof(double) * q);
    std::memcpy(ds.xs.col(i).data(), rec.data() + 1 + sizeof(double) * q, sizeof(double) * p);
  }
  return ds;
}

int default_thread_count() {
  if (const char* env = std::getenv("ABCNN_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, int n_threads) {
  if (n == 0) return;
  int workers = n_threads > 0 ? n_threads : default_thread_count();
  if (workers <= 1 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  workers = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(workers), n));
  std::atomic<std::size_t> next{0};
  const std::size_t chunk = std::max<std::size_t>(1, n / (static_cast<std::size_t>(workers) * 8));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t begin = next.fetch_add(chunk);
        if (begin >= n) return;
        std::size_t end = std::min(n, begin + chunk);
        for (std::size_t i = begin; i < end; ++i) fn(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace abcnn
