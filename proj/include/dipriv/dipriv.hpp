#pragma once

// Umbrella header: adversarially trained privacy-preserving release of
// sequential data, with a directed-information-style entropy penalty.

#include "dipriv/config.hpp"
#include "dipriv/csv.hpp"
#include "dipriv/dataset.hpp"
#include "dipriv/errors.hpp"
#include "dipriv/format.hpp"
#include "dipriv/gradcheck.hpp"
#include "dipriv/losses.hpp"
#include "dipriv/lstm.hpp"
#include "dipriv/matrix.hpp"
#include "dipriv/mechanism.hpp"
#include "dipriv/metrics.hpp"
#include "dipriv/optim.hpp"
#include "dipriv/psd_report.hpp"
#include "dipriv/rng.hpp"
#include "dipriv/serialize.hpp"
#include "dipriv/sweep.hpp"
#include "dipriv/train.hpp"
#include "dipriv/welch.hpp"
