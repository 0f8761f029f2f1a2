package shop;

public class PriceCalculator {
    private int discountPercent;

    public PriceCalculator(int discountPercent) {
        this.discountPercent = discountPercent;
    }

    public int total(int unitPrice, int quantity, boolean member, String region) {
        int base = unitPrice * quantity;
        if (quantity > 10) {
            base = base - base * 5 / 100;
        }
        if (member && discountPercent > 0) {
            base = base - base * discountPercent / 100;
        }
        int shipping = 0;
        if (region.equals("north")) {
            shipping = 7;
        } else if (region.equals("south")) {
            shipping = 9;
        } else if (region.equals("east")) {
            shipping = 11;
        } else {
            shipping = 15;
        }
        if (base > 500) {
            shipping = 0;
        }
        return base + shipping;
    }
}
