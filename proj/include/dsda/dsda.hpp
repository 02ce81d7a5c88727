#pragma once

#include "dsda/error.hpp"
#include "dsda/matkit.hpp"
#include "dsda/problems.hpp"
#include "dsda/sda.hpp"
#include "dsda/decoupled.hpp"
#include "dsda/residuals.hpp"
#include "dsda/driver.hpp"
#include "dsda/matrix_market.hpp"
#include "dsda/config.hpp"
#include "dsda/report.hpp"
