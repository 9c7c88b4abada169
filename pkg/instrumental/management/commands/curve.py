from ...helpers.command_helper import InstrumentalCommand, grid_points, instrumental_setting
from ...helpers.dependence_helper import dependence_curve, is_convex
from ...helpers.inequalities_helper import get_inequality
from ...helpers.numeric_helper import format_number


class Command(InstrumentalCommand):
    help = (
        'Computes the piecewise-linear minimal dependence as a function of the violation alpha and '
        'writes it as CSV (alpha, dependence, segment_slope) plus a breakpoints CSV.'
    )

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--ineq',
            type=str,
            required=True,
            help='Inequality id, e.g. bonet, c2, c3, kedagni.'
        )
        parser.add_argument(
            '--px',
            type=str,
            required=True,
            help='Instrument marginal as comma separated values, e.g. 1/3,1/3,1/3.'
        )
        parser.add_argument(
            '--grid',
            type=grid_points,
            default=None,
            help='Number of evenly spaced alpha values in the CSV (default from settings).'
        )
        parser.add_argument(
            '--out',
            type=str,
            required=True,
            help='Path of the curve CSV.'
        )

    def run(self, **options):
        exact = options['exact']
        grid = options['grid'] or instrumental_setting('CURVE_GRID')
        ineq = get_inequality(options['ineq'])
        p_x = self.parse_px(options['px'], exact)

        curve = dependence_curve(ineq, p_x, exact, options['backend'], workers=instrumental_setting('WORKERS'))
        self.writer().emit_curve_csv(curve, options['out'], grid)

        slopes = ', '.join(str(format_number(slope)) for slope in curve.slopes) or 'none'
        self.stdout.write(f"alpha_max = {format_number(curve.alpha_max)}")
        self.stdout.write(f"Segment slopes: {slopes}")
        if not is_convex(curve, 0.0 if exact else instrumental_setting('FLOAT_TOLERANCE')):
            self.stdout.write(self.style.WARNING('Segment slopes are not non-decreasing.'))
        self.stdout.write(self.style.SUCCESS(f"Curve for '{ineq.id}' has {len(curve.slopes)} segment(s)."))
