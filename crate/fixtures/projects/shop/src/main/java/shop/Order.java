package shop;

import java.util.ArrayList;
import java.util.List;

public class Order {
    private final List<String> items = new ArrayList<>();
    private final List<Integer> prices = new ArrayList<>();
    private final PriceCalculator calculator;
    private final Inventory inventory;

    public Order(PriceCalculator calculator, Inventory inventory) {
        this.calculator = calculator;
        this.inventory = inventory;
    }

    public boolean addLine(String item, int price) {
        if (!inventory.take(item, 1)) {
            return false;
        }
        items.add(item);
        prices.add(price);
        return true;
    }

    public int lineCount() {
        return items.size();
    }

    public int total(boolean member, String region) {
        int sum = 0;
        for (int p : prices) {
            sum = sum + p;
        }
        return calculator.total(sum, 1, member, region);
    }
}
