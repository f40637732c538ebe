#pragma once

#include "edgar/affine.hpp"
#include "edgar/binary_io.hpp"
#include "edgar/dataset_io.hpp"
#include "edgar/detector.hpp"
#include "edgar/eval.hpp"
#include "edgar/model_io.hpp"
#include "edgar/network.hpp"
#include "edgar/optimizer.hpp"
#include "edgar/post_filter.hpp"
#include "edgar/preprocess.hpp"
#include "edgar/proportion.hpp"
#include "edgar/quant.hpp"
#include "edgar/random.hpp"
#include "edgar/signal.hpp"
#include "edgar/synth.hpp"
#include "edgar/trainer.hpp"
#include "edgar/vat.hpp"
