"""Small-sample critical values of the D statistic under
independence (continuous data). Generated by tools/gen_null_table.py;
do not edit by hand."""

ALPHAS = (0.5, 0.25, 0.1, 0.05, 0.025, 0.01, 0.005, 0.001)

CRITICAL = {
    5: (0.0, 0.0, 0.0, 0.03333333333333333, 0.03333333333333333, 0.03333333333333333, 0.03333333333333333, 0.03333333333333333),
    6: (0.0, 0.0, 0.005555555555555556, 0.016666666666666666, 0.016666666666666666, 0.03333333333333333, 0.03333333333333333, 0.03333333333333333),
    7: (-0.0015873015873015873, 0.0015873015873015873, 0.004761904761904762, 0.009523809523809525, 0.014285714285714285, 0.01904761904761905, 0.023809523809523808, 0.03333333333333333),
    8: (-0.0011904761904761906, 0.0017857142857142857, 0.004761904761904762, 0.007738095238095238, 0.010714285714285714, 0.014285714285714285, 0.016666666666666666, 0.023809523809523808),
    9: (-0.0006613756613756613, 0.0013227513227513227, 0.003968253968253968, 0.006349206349206349, 0.008862433862433862, 0.01216931216931217, 0.014814814814814815, 0.020767195767195767),
    10: (-0.0006613756613756613, 0.0010582010582010583, 0.0033068783068783067, 0.005291005291005291, 0.007407407407407408, 0.010052910052910053, 0.012301587301587301, 0.01746031746031746),
    11: (-0.0005411255411255411, 0.0008658008658008658, 0.002886002886002886, 0.004545454545454545, 0.006313131313131313, 0.00873015873015873, 0.010606060606060607, 0.014935064935064935),
    12: (-0.000462962962962963, 0.0007996632996632996, 0.0025673400673400675, 0.00404040404040404, 0.005555555555555556, 0.007702020202020202, 0.009301346801346802, 0.013173400673400674),
    13: (-0.0004403004403004403, 0.0006993006993006993, 0.0022921522921522924, 0.003587153587153587, 0.00495985495985496, 0.006928256928256929, 0.008404558404558405, 0.011784511784511785),
    14: (-0.0003996003996003996, 0.0006327006327006327, 0.0020646020646020646, 0.00323010323010323, 0.004462204462204462, 0.00621045621045621, 0.007509157509157509, 0.010656010656010656),
    15: (-0.00037185037185037185, 0.0005716505716505717, 0.0018537018537018537, 0.0029193029193029193, 0.004045954045954046, 0.005577755577755578, 0.006826506826506827, 0.009695859695859696),
    16: (-0.00034340659340659343, 0.0005189255189255189, 0.0017322954822954822, 0.0027167277167277166, 0.0037622100122100123, 0.005212148962148962, 0.006341575091575092, 0.008997252747252747),
    17: (-0.0003178194354664943, 0.0004821159232923939, 0.0015890971773324714, 0.0025075414781297136, 0.0034636931695755224, 0.0047888386123680245, 0.005796164619694032, 0.008195970695970696),
    18: (-0.0002956738250855898, 0.000439620292561469, 0.0014628073451602864, 0.002310924369747899, 0.003194055399937753, 0.004411764705882353, 0.005364923747276688, 0.007648615001556178),
    19: (-0.00027806444215112947, 0.000412796697626419, 0.00137885563582158, 0.0021729159500057335, 0.0030071092764591217, 0.00416380002293315, 0.005061059511523908, 0.007090643274853801),
    20: (-0.0002622979016167871, 0.0003848469212246302, 0.0012856897144822841, 0.0020295837633298934, 0.0028164774681802545, 0.0038850189198486413, 0.004714912280701754, 0.0067509459924320605),
    21: (-0.00024735040214916376, 0.0003579209461562403, 0.0012048094091437745, 0.0019067276033220306, 0.0026430455223024883, 0.0036537421986338396, 0.004408898062148836, 0.0063008829262699234),
    22: (-0.0002354370775423407, 0.00033543454596086177, 0.0011316169210906053, 0.0017923596870965293, 0.002483481430849852, 0.003437887648413964, 0.004160654160654161, 0.0059276980329611905),
    23: (-0.00021793614470960008, 0.0003254182888050165, 0.0010807651539916985, 0.0017078268794515933, 0.0023670837171981336, 0.0032774624307805086, 0.0039832783539877365, 0.005742617413097962),
    24: (-0.00021174477696216828, 0.00030428508689378254, 0.0010273542882238535, 0.0016178869439739006, 0.002242926155969634, 0.0031220591003199697, 0.0037870945479641133, 0.005353221657569483),
    25: (-0.00020296128991781167, 0.0002870318087709392, 0.0009749670619235836, 0.0015352280569671875, 0.0021299956082564777, 0.0029512516469038207, 0.0035927598971077232, 0.0050564652738565785),
    26: (-0.0001920543224891051, 0.0002746528833485355, 0.0009293604945778859, 0.0014710651667173406, 0.0020431742170872605, 0.002811898246680855, 0.0034189723320158104, 0.004831255700820918),
    27: (-0.00018374003881250258, 0.00026384243775548125, 0.0008842231305999422, 0.0013912630579297246, 0.001930509104422148, 0.002683223915107973, 0.0032652050043354393, 0.004521656550642058),
    28: (-0.0001773843440510107, 0.0002465744132410799, 0.0008462216795550129, 0.0013424230090896758, 0.0018677927011260345, 0.0025647808981142314, 0.003097612264278931, 0.004395265228598562),
    29: (-0.00016981741119672153, 0.0002409723099378272, 0.0008184918529746116, 0.001290050945223359, 0.0017818197128541956, 0.0024731590248831628, 0.002994400235779546, 0.004291328084431533),
    30: (-0.00016350188763981867, 0.00022923011428758555, 0.0007777450306185939, 0.0012331644515552562, 0.0017054252686436594, 0.0023790811147132987, 0.002886662082064381, 0.004124036882657572),
    31: (-0.00015792581606448867, 0.0002179572442827912, 0.0007514718489876072, 0.001193369862261223, 0.001653806993072844, 0.0022858045290377513, 0.0027871454271157646, 0.003921170495141574),
    32: (-0.00015327877535886434, 0.000210220350654166, 0.0007220324169712379, 0.001145121563642142, 0.0015913846072355528, 0.002196388844748133, 0.0026674810636156576, 0.003784131839610149),
    33: (-0.00014747025314322312, 0.00020414096470826171, 0.0006995707913394232, 0.0011079229446860149, 0.0015396596667453175, 0.0021426023303108954, 0.0025901394366355432, 0.003689565285783306),
    34: (-0.00014339313437985163, 0.00019550342130987292, 0.0006750378548291262, 0.0010673624288425048, 0.0014864010120177102, 0.002044879535391869, 0.0024787725451862076, 0.0035155875644490445),
    35: (-0.00013789973467392822, 0.00019196094860231483, 0.0006525850809532024, 0.0010323997634244313, 0.0014379872183477495, 0.001985222241389224, 0.002417763293000485, 0.0034232607999211415),
    36: (-0.00013448561242678889, 0.00018338143338143337, 0.0006297215856039386, 0.0009963076139546728, 0.001391983561101208, 0.0019254166312989843, 0.0023387764196587725, 0.003289548142489319),
    37: (-0.0001314530726295432, 0.00017580605815899935, 0.000609012373718256, 0.00096762155585685, 0.0013461131108189932, 0.0018599195069783304, 0.0022685787391669744, 0.0032131061542826247),
    38: (-0.00012657504917566837, 0.0001711353104541959, 0.000591701830091923, 0.0009374921139627022, 0.0013003494427643034, 0.001803395611445147, 0.002183253576442431, 0.003058985566725505),
    39: (-0.0001234895971738077, 0.00016624490308700835, 0.000574316363790048, 0.0009114667009403852, 0.0012661302134986346, 0.0017407806881491092, 0.0020996126259284153, 0.003058466216360953),
    40: (-0.00011935011935011935, 0.00016099095046463467, 0.0005586051638683218, 0.000885146279883122, 0.0012290630711683343, 0.0016906076116602433, 0.0020507856034171824, 0.0029583733531101954),
    41: (-0.00011658246574806266, 0.000155391394159045, 0.0005416792323082438, 0.000856354033504226, 0.0011920234641672382, 0.0016555288378138186, 0.0020047869534390713, 0.0028366324258493705),
    42: (-0.00011312678193294367, 0.00015074427783028554, 0.0005262530936471886, 0.0008329924247767636, 0.001160695672890795, 0.001601917551853367, 0.001953837062951312, 0.0027744862468867602),
    43: (-0.00011098437076882908, 0.0001475520760829893, 0.0005127097015922881, 0.0008151550976281549, 0.0011355380612328996, 0.0015716321870604343, 0.0019076672366519218, 0.0026780649866299327),
    44: (-0.00010933007246109912, 0.00014192651742283053, 0.0004980012424708964, 0.0007875632592025105, 0.0010994394148109406, 0.0015220268481754586, 0.0018499863721077561, 0.0026246276884393733),
    45: (-0.00010652673726978888, 0.00013971658895084874, 0.0004874392849435391, 0.0007778402560024794, 0.0010804913243937634, 0.001490896868094826, 0.0018131917451259482, 0.00259925784599636),
    46: (-0.00010203630021627999, 0.00013785600236560804, 0.0004783255541597301, 0.0007574906462671882, 0.00104735544573765, 0.0014448495742732344, 0.001766546003148632, 0.00252984853591527),
    47: (-0.0001002756085259366, 0.00013329517449303178, 0.0004653379306478289, 0.0007359701613514836, 0.0010227699189255027, 0.0014139958194773934, 0.00171417072864914, 0.002464124496910677),
    48: (-9.79966174230744e-05, 0.00013021441675465728, 0.000450114777126803, 0.0007149236739893539, 0.0009909260660879533, 0.0013769167157233761, 0.0016715879111808807, 0.002383260604814721),
    49: (-9.57233546106283e-05, 0.0001274505073897171, 0.0004414793978029078, 0.0007001824267583485, 0.0009698981864304977, 0.0013393927825010156, 0.0016372521873380867, 0.0023202337775484333),
    50: (-9.3844198178809e-05, 0.00012398761539768544, 0.00043229687804816655, 0.0006856526144222721, 0.000956329802966515, 0.001315360556803665, 0.0015980101568842152, 0.002275009911457645),
}
