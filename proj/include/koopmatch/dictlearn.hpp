#pragma once

#include "koopmatch/edmd.hpp"

namespace koop {

// Shared learned dictionary: fixed prefix (1, z1, z2) followed by the outputs
// of a small fully-connected network with tanh activations. Training never
// touches the prefix.
struct MlpDictionary {
    int input_dim = 2;
    int width = 32;
    int out_dim = 5;
    std::vector<Mat> w;  // input->h1, h1->h2, h2->h3, h3->out
    std::vector<Vec> b;

    static MlpDictionary init(int width, int out_dim, std::uint64_t seed);

    int n() const { return 3 + out_dim; }
    int param_count() const;
    Vec flatten() const;
    void unflatten(const Vec& theta);

    Mat psi(const Mat& z) const;  // full dictionary, (3+out_dim) x M
    Dictionary as_dictionary() const;

    struct ForwardCache {
        std::vector<Mat> act;  // tanh activations per hidden layer
        Mat out;
    };
    ForwardCache forward(const Mat& z) const;
    // Parameter gradient given dL/d(out); z are the inputs of the cached pass.
    Vec backward(const ForwardCache& cache, const Mat& z, const Mat& dout) const;
};

struct TrainConfig {
    double lr = 1e-3;
    double ridge = 1e-8;
    double beta = 100.0;
    int iters = 5000;
    int sim_every = 50;  // 0 disables the similarity step
    std::uint64_t seed = 0;
    int width = 32;
};

double combined_loss(const KoopmanMatrix& k1, const KoopmanMatrix& k2,
                     const Dictionary& dict, const SamplePairs& data1,
                     const SamplePairs& data2);
double combined_loss(const KoopmanMatrix& k1, const KoopmanMatrix& k2,
                     const MlpDictionary& dict, const SamplePairs& data1,
                     const SamplePairs& data2);

KoopmanMatrix kstep(const MlpDictionary& dict, const SamplePairs& data, double ridge);

struct SimilarityState {
    Mat p;
    double residual = 0.0;  // ||P K1' - K2' P||_F
    double cond = 0.0;
    bool improved = false;
};

// Constrained minimization of beta ||P'A - B P'||^2 + J(A, B) over (A, B, P'),
// ||P||_F^2 >= 1, by exact alternating least squares. Objective decreases
// monotonically; if no decrease is possible the inputs come back unchanged
// with improved=false.
std::tuple<KoopmanMatrix, KoopmanMatrix, SimilarityState> similarity_step(
    const KoopmanMatrix& k1, const KoopmanMatrix& k2, const Dictionary& dict,
    const SamplePairs& data1, const SamplePairs& data2, double beta, std::uint64_t seed);

struct TrainHistory {
    std::vector<double> loss;
    std::vector<double> sim_residual;
    std::vector<double> spectrum_gap;
    bool aborted = false;
};

struct TrainResult {
    MlpDictionary dict;
    KoopmanMatrix k1, k2;
    TrainHistory history;
};

TrainResult train(const SamplePairs& data1, const SamplePairs& data2, const TrainConfig& cfg);

// Max relative error between analytic and central-difference gradients over a
// random subset of 50 parameters.
double grad_check(const MlpDictionary& dict, const KoopmanMatrix& k1,
                  const KoopmanMatrix& k2, const SamplePairs& data1,
                  const SamplePairs& data2, double eps, std::uint64_t seed);

// Analytic gradient of the combined loss with the K matrices held fixed.
Vec loss_gradient(const MlpDictionary& dict, const KoopmanMatrix& k1,
                  const KoopmanMatrix& k2, const SamplePairs& data1,
                  const SamplePairs& data2);

}  // namespace koop
