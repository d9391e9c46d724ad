#pragma once

#include <vector>

namespace cbd {

struct Prediction {
    double prob = 0.5;
    int label = 0;
};

/// Per-epoch curves recorded by the gradient-trained models. Loss is the
/// mean binary cross-entropy on the training set after the epoch's updates.
struct TrainingHistory {
    std::vector<double> train_loss;
    std::vector<double> train_accuracy;
    std::vector<double> validation_accuracy;
};

}  // namespace cbd
