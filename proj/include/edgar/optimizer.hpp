#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace edgar {

struct NesterovState {
    std::vector<double> velocity;
};

/// Nesterov momentum in the velocity form used by Keras:
///   v <- momentum * v - lr * g
///   theta <- theta + momentum * v - lr * g
inline void sgd_step(std::span<double> params, std::span<const double> grads, NesterovState& state, double lr, double momentum = 0.9) {
    if (grads.size() != params.size()) throw std::invalid_argument("sgd_step: gradient/parameter size mismatch");
    if (state.velocity.empty()) state.velocity.assign(params.size(), 0.0);
    if (state.velocity.size() != params.size()) throw std::invalid_argument("sgd_step: velocity size mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double step = lr * grads[i];
        state.velocity[i] = momentum * state.velocity[i] - step;
        params[i] += momentum * state.velocity[i] - step;
    }
}

/// Halves the learning rate after `lr_patience` epochs without an improvement
/// larger than `min_delta`, and requests a stop after `stop_patience` epochs
/// without any improvement of the monitored validation loss.
class PlateauSchedule {
public:
    PlateauSchedule(double lr, int lr_patience = 20, int stop_patience = 40, double min_delta = 1e-5, double factor = 0.5)
        : lr_(lr), lr_patience_(lr_patience), stop_patience_(stop_patience), min_delta_(min_delta), factor_(factor) {
        if (lr_patience < 1 || stop_patience < 1) throw std::invalid_argument("patience values must be positive");
    }

    /// Feeds one epoch's validation loss; returns false when training should stop.
    bool update(double val_loss) {
        if (val_loss < lr_best_ - min_delta_) {
            lr_best_ = val_loss;
            lr_wait_ = 0;
        } else if (++lr_wait_ >= lr_patience_) {
            lr_ *= factor_;
            lr_wait_ = 0;
        }
        if (val_loss < stop_best_) {
            stop_best_ = val_loss;
            stop_wait_ = 0;
        } else {
            ++stop_wait_;
        }
        return stop_wait_ < stop_patience_;
    }

    [[nodiscard]] double lr() const noexcept { return lr_; }

private:
    double lr_;
    int lr_patience_;
    int stop_patience_;
    double min_delta_;
    double factor_;
    double lr_best_ = std::numeric_limits<double>::infinity();
    double stop_best_ = std::numeric_limits<double>::infinity();
    int lr_wait_ = 0;
    int stop_wait_ = 0;
};

}  // namespace edgar
