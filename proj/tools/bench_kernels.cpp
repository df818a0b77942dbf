// Timing comparison of the OpenMP kernels against their serial references
// on synthetic data sized like a real training run.

#include <chrono>
#include <cstdio>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "doccl/cluster.hpp"
#include "doccl/kernels.hpp"
#include "doccl/rng.hpp"

using namespace doccl;

namespace {

using Clock = std::chrono::steady_clock;

template <typename F>
double time_ms(F&& fn, int repeats) {
    // One warmup, then best of `repeats`.
    fn();
    double best = 1e300;
    for (int r = 0; r < repeats; ++r) {
        auto t0 = Clock::now();
        fn();
        double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
        if (ms < best) best = ms;
    }
    return best;
}

void report(const char* name, double serial_ms, double parallel_ms) {
    std::printf("%-24s serial %9.3f ms   openmp %9.3f ms   speedup %5.2fx\n", name, serial_ms,
                parallel_ms, serial_ms / parallel_ms);
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
    std::printf("Built without OpenMP; both columns run serially.\n");
#endif

    const EncoderDims dims{8000, 64, 128, 20};
    EncoderParams params = init_params(1, dims);
    Rng rng(2);

    std::vector<std::vector<int>> docs(2000);
    for (auto& doc : docs) {
        doc.resize(20 + rng.index(100));
        for (int& t : doc) t = static_cast<int>(rng.index(dims.vocab_size));
    }

    report("encode_batch",
           time_ms([&] { encode_batch_serial(params, docs); }, 3),
           time_ms([&] { encode_batch(params, docs); }, 3));

    BatchForward fwd = encode_batch(params, docs);
    BatchLatents latents(fwd.latents.begin(), fwd.latents.begin() + 400);
    report("pairwise_similarities",
           time_ms([&] { pairwise_similarity_matrix_serial(SimilarityKind::Cosine, latents); }, 5),
           time_ms([&] { pairwise_similarity_matrix(SimilarityKind::Cosine, latents); }, 5));

    std::vector<std::vector<double>> ups_v(docs.size()), ups_z(docs.size());
    for (auto& v : ups_v) {
        v.resize(dims.d_lat);
        for (double& x : v) x = rng.uniform(-1.0, 1.0);
    }
    report("batch_backward",
           time_ms([&] { batch_backward_serial(params, fwd.caches, ups_v, ups_z); }, 3),
           time_ms([&] { batch_backward(params, fwd.caches, ups_v, ups_z); }, 3));

    const size_t n = docs.size();
    const int k = 20;
    std::vector<double> points(n * dims.d_lat);
    for (size_t i = 0; i < n; ++i)
        for (int e = 0; e < dims.d_lat; ++e) points[i * dims.d_lat + e] = fwd.latents[i][e];
    std::vector<double> centroids(static_cast<size_t>(k) * dims.d_lat);
    for (double& x : centroids) x = rng.uniform(-1.0, 1.0);
    report("assign_clusters",
           time_ms([&] { assign_clusters_serial(points, n, centroids, k, dims.d_lat); }, 5),
           time_ms([&] { assign_clusters(points, n, centroids, k, dims.d_lat); }, 5));

    return 0;
}
