#pragma once

// Generated by tests/oracles/oracle.py from exact rational arithmetic. Do not edit.

namespace oracle {

// 1/4
inline constexpr double G_phi_one = 0.25;
// 3/2
inline constexpr double condexp_two_zero = 1.5;
// 26/1
inline constexpr double count_depth3_all = 26.0;
// 1/1
inline constexpr double count_depth3_terminal = 1.0;
// 2/1
inline constexpr double count_one_period_all = 2.0;
// 2/3
inline constexpr double dirac_gap_n1 = 0.6666666666666666;
// 1/9
inline constexpr double dirac_gap_n16 = 0.1111111111111111;
// 1/8193
inline constexpr double dirac_gap_n16384 = 0.00012205541315757354;
// 2/1
inline constexpr double doob_B_time2 = 2.0;
// 3/1
inline constexpr double doob_snell_root = 3.0;
// 9/10
inline constexpr double e2_constrained_snell_root = 0.9;
// 11/20
inline constexpr double e2_evaluate_tau = 0.55;
// 11/20
inline constexpr double e2_game_infsup = 0.55;
// 11/20
inline constexpr double e2_game_supinf = 0.55;
// 1243/1750
inline constexpr double e2_linear_lambda_3_2_root = 0.7102857142857143;
// 11/20
inline constexpr double e2_pen_lower_n4_root = 0.55;
// 409/500
inline constexpr double e2_pen_upper_n4_root = 0.818;
// 147/200
inline constexpr double e2_penalized_n4_node2 = 0.735;
// 399/500
inline constexpr double e2_penalized_n4_root = 0.798;
// 1/10
inline constexpr double e2_reflected_dK_node1 = 0.1;
// 71/100
inline constexpr double e2_reflected_root = 0.71;
// 9/10
inline constexpr double e2_upper_root = 0.9;
// 71/100
inline constexpr double e2_weighted_root = 0.71;
// 3/2
inline constexpr double eta_default = 1.5;
// 1/2
inline constexpr double eta_survive = 0.5;
// 1/1
inline constexpr double key_lemma_pre_default_root = 1.0;
// 3/2
inline constexpr double key_lemma_time_root = 1.5;
// 18/25
inline constexpr double l2_G_leaf3 = 0.72;
// 3/20
inline constexpr double l2_G_leaf6 = 0.15;
// 7/10
inline constexpr double l2_G_node1 = 0.7;
// 9/20
inline constexpr double l2_G_node2 = 0.45;
// 3/5
inline constexpr double l2_GammaTilde_leaf4 = 0.6;
// 4/5
inline constexpr double l2_Gtilde_leaf3 = 0.8;
// 9/10
inline constexpr double l2_m_leaf4 = 0.9;
// 1/1
inline constexpr double l2_m_node2 = 1.0;
// 1/1
inline constexpr double l2_m_root = 1.0;
// 1/2
inline constexpr double lab_one_G1 = 0.5;
// 1/2
inline constexpr double lab_one_GammaTilde1 = 0.5;
// 1/2
inline constexpr double lab_one_theta1 = 0.5;
// 2/5
inline constexpr double lab_path_down_default = 0.4;
// 1/10
inline constexpr double lab_path_down_survive = 0.1;
// 1/10
inline constexpr double lab_path_up_default = 0.1;
// 2/5
inline constexpr double lab_path_up_survive = 0.4;
// 3/4
inline constexpr double lambda_increment_phi1 = 0.75;
// 2/1
inline constexpr double one_constrained_snell = 2.0;
// 1/1
inline constexpr double one_game = 1.0;
// 3/2
inline constexpr double one_linear_lambda2 = 1.5;
// 4/3
inline constexpr double one_penalized_n1 = 1.3333333333333333;
// 5/3
inline constexpr double one_penalized_n4 = 1.6666666666666667;
// 2/1
inline constexpr double one_upper = 2.0;
// 1/4
inline constexpr double tree_zf_q_down = 0.25;
// 3/4
inline constexpr double tree_zf_q_up = 0.75;

}  // namespace oracle
