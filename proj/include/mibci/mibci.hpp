#pragma once

#include "mibci/anfis.hpp"
#include "mibci/anfis_io.hpp"
#include "mibci/anfis_pso.hpp"
#include "mibci/anfis_train.hpp"
#include "mibci/augment.hpp"
#include "mibci/config.hpp"
#include "mibci/csp.hpp"
#include "mibci/error.hpp"
#include "mibci/fbcsp.hpp"
#include "mibci/filter.hpp"
#include "mibci/harness.hpp"
#include "mibci/ica.hpp"
#include "mibci/metrics.hpp"
#include "mibci/mutual_info.hpp"
#include "mibci/parallel.hpp"
#include "mibci/preprocess.hpp"
#include "mibci/pso.hpp"
#include "mibci/report.hpp"
#include "mibci/rng.hpp"
#include "mibci/signal.hpp"
#include "mibci/splits.hpp"
#include "mibci/synth.hpp"
#include "mibci/trialstore.hpp"
