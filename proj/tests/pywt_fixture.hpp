#pragma once

// Frozen outputs from PyWavelets 'symmetric' mode (pywt.dwt / pywt.wavedec /
// pywt.waverec with zeroed detail bands) for coif3 on a length-21 signal
// x[i] = 0.5 i + sin(1.3 i) + 0.25 (-1)^i.

#include <vector>

namespace pywt_fixture {

inline const std::vector<double> kSignal = {
    0.25,
    1.213558185417193,
    1.7655013718214643,
    0.5622338408160259,
    1.3665453442798468,
    2.4651199880878156,
    4.248543345374605,
    3.569098362349352,
    3.422173530914346,
    3.488016416080968,
    5.670167036826641,
    6.236771964274613,
    6.357753652299443,
    5.32087598726563,
    6.645167177593716,
    7.8555398697196015,
    9.17879523407724,
    8.14136340457592,
    8.26308444187935,
    8.83063908392677,
    11.012558450479602};
inline const std::vector<double> kCoif3Approx = {
    5.372567640285523,
    5.376637997476583,
    3.779652987331544,
    1.328566683968624,
    1.678348434411084,
    0.5146062794558864,
    2.013661077624397,
    1.7008388816319064,
    5.531281501141391,
    4.581876087864649,
    7.624702632483716,
    8.611644100049311,
    9.126933162577789,
    12.524365503022198,
    11.390571401965026,
    15.28222706430776,
    12.962534458029952,
    11.883185235382182,
    11.377634940615968};
inline const std::vector<double> kCoif3Detail = {
    0.2071512922721188,
    -0.8587618919116816,
    0.4871835637923624,
    -0.33856274990781937,
    0.7827416113561889,
    0.18378288141748295,
    0.2214198179891954,
    0.7572083665009951,
    -0.2068832350165888,
    0.9104157025540632,
    -0.04059379212755777,
    0.44938754654489194,
    0.680336971476749,
    -0.7348468929250264,
    0.23208127902209416,
    -0.9228058089062625,
    0.041416310675542994,
    -0.471356794014126,
    -0.5453750003127489};
inline const std::vector<double> kCoif3TrendLevel2 = {
    0.599661491574687,
    0.7194314508896699,
    0.9786956201062844,
    1.38923770843326,
    1.9005450435222704,
    2.480855911900076,
    3.0660172058663187,
    3.5742875817419355,
    4.046966811830953,
    4.5306306184846,
    5.006642752752887,
    5.475606216096642,
    5.948424752342225,
    6.409782828372433,
    6.912140345574579,
    7.51936102734128,
    8.142517513064787,
    8.700522925795937,
    9.16157719195017,
    9.464334753611734,
    9.62153956416058};

}  // namespace pywt_fixture
