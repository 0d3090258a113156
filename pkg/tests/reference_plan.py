"""A published 15-bar scaffold plan, used as a format and range reference."""

PT1, PT2, MAXDIS = 1, 15, 12.2436

XPOST = [0.5302, 2.0914, 0.5910, 3.1395, 4.8495, 4.7545, 6.7826, 7.6641,
         6.3257, 8.2338, 10.0656, 9.0981, 9.8843, 11.8290, 14.1256]
YPOST = [1.0297, 1.7995, 2.5582, 1.7918, 1.0261, 2.2556, 0.6140, 2.4785,
         2.0287, 1.4548, 3.0474, 2.1279, 1.4594, 1.8611, 1.1660]
ZPOST = [1.4161, 1.4465, 3.2302, 2.5618, 0.7701, 1.9557, 2.3657, 1.0290,
         1.8610, 1.6091, 2.5676, 2.3247, 2.1276, 2.3783, 2.3499]
THETAEL = [79.9774, 46.7932, 58.0070, 45.1947, 48.0388, 37.7851, 6.3675, 26.1570,
           46.5061, 42.0398, 27.4581, 3.2837, 5.9276, 27.8341, 12.3356]
THETAAZ = [74.4751, -168.9037, 114.0598, -1.6195, 165.7398, 32.6991, -29.1135, -154.4588,
           -6.2954, 170.7188, 31.0561, -17.6704, -174.4903, -7.2029, 163.3519]
JSAVE = [1, 2, 3, 2, 1, 2, 3, 1, 1, 2, 3, 1, 3, 2, 1]


def plan():
    from tforge.scaffold import AxisRecord, ScaffoldPlan, StrutPlacement

    placements = tuple(
        StrutPlacement(strut=i + 1, xpost=XPOST[i], ypost=YPOST[i], zpost=ZPOST[i], theta_az=THETAAZ[i],
                       theta_el=THETAEL[i], jsave=JSAVE[i], high_vertex=2 * i + 2, low_vertex=2 * i + 1,
                       endpoint_z=(0.0, 2 * ZPOST[i]))
        for i in range(15)
    )
    return ScaffoldPlan(AxisRecord(PT1, PT2, MAXDIS), placements)
